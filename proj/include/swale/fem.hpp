#pragma once

// P1 finite elements on TriMesh: element matrices in closed form, global
// assembly, nodal divergence, and the symmetric positive-definite solves used
// by the stepper (momentum system and harmonic mesh-velocity extension).

#include <array>
#include <cmath>
#include <ostream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "swale/errors.hpp"
#include "swale/mesh.hpp"

namespace swale {

using SparseOperator = Eigen::SparseMatrix<double>;
using Matrix3 = Eigen::Matrix3d;
/// Row i holds the 2-vector load of local basis function i.
using ElementLoad = Eigen::Matrix<double, 3, 2>;

/// Area and barycentric-coordinate gradients of one triangle.
struct ElementGeometry {
    double area = 0.0;
    std::array<Vec2, 3> grad;
};

inline ElementGeometry element_geometry(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    ElementGeometry g;
    g.area = signed_area(p0, p1, p2);
    const double inv = 1.0 / (2.0 * g.area);
    const std::array<const Vec2*, 3> p{&p0, &p1, &p2};
    for (int i = 0; i < 3; ++i) {
        const Vec2& pj = *p[static_cast<std::size_t>((i + 1) % 3)];
        const Vec2& pk = *p[static_cast<std::size_t>((i + 2) % 3)];
        g.grad[static_cast<std::size_t>(i)] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) * inv;
    }
    return g;
}

inline ElementGeometry element_geometry(const TriMesh& mesh, Index t) {
    const auto& tri = mesh.triangle(t);
    return element_geometry(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]));
}

inline Matrix3 element_mass(double area) {
    Matrix3 m;
    m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    return m * (area / 12.0);
}

inline Matrix3 element_stiffness(const ElementGeometry& g) {
    Matrix3 k;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            k(i, j) = g.area * g.grad[static_cast<std::size_t>(i)].dot(g.grad[static_cast<std::size_t>(j)]);
    return k;
}

/// Mass matrix weighted by the linear interpolant of vertex weights w.
/// Uses the exact moments of barycentric products:
/// int l_i^3 = A/10, int l_i^2 l_j = A/30, int l_0 l_1 l_2 = A/60.
inline Matrix3 element_weighted_mass(double area, const Eigen::Vector3d& w) {
    Matrix3 m;
    const double sum = w.sum();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) {
                m(i, j) = area * (3.0 * w(i) + (sum - w(i))) / 30.0;
            } else {
                const int k = 3 - i - j;
                m(i, j) = area * (2.0 * (w(i) + w(j)) + w(k)) / 60.0;
            }
        }
    }
    return m;
}

/// int (grad eta) . phi_i for a piecewise-linear eta: the gradient is constant
/// on the element and each basis function integrates to A/3.
inline ElementLoad element_gradient_load(const ElementGeometry& g, const Eigen::Vector3d& eta) {
    Vec2 grad = Vec2::Zero();
    for (int i = 0; i < 3; ++i) grad += eta(i) * g.grad[static_cast<std::size_t>(i)];
    ElementLoad load;
    for (int i = 0; i < 3; ++i) load.row(i) = (g.area / 3.0) * grad.transpose();
    return load;
}

/// -int h grad(phi_i): the integrated-by-parts pairing of h with div phi.
inline ElementLoad element_divergence_load(const ElementGeometry& g, const Eigen::Vector3d& h) {
    const double mean = h.sum() / 3.0;
    ElementLoad load;
    for (int i = 0; i < 3; ++i) load.row(i) = -g.area * mean * g.grad[static_cast<std::size_t>(i)].transpose();
    return load;
}

namespace detail {

template <typename ElementFn>
SparseOperator assemble_scalar(const TriMesh& mesh, ElementFn&& element) {
    const auto n = static_cast<Index>(mesh.vertex_count());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh.triangle_count());
    for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
        const auto& tri = mesh.triangle(t);
        const Matrix3 ke = element(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], ke(i, j));
    }
    SparseOperator op(n, n);
    op.setFromTriplets(trips.begin(), trips.end());
    return op;
}

inline void require_size(const TriMesh& mesh, Eigen::Index rows, const char* what) {
    if (static_cast<std::size_t>(rows) != mesh.vertex_count())
        throw ContractViolation(std::string(what) + " does not match mesh vertex count");
}

inline Eigen::Vector3d gather(const ScalarField& f, const Triangle& tri) { return {f(tri[0]), f(tri[1]), f(tri[2])}; }

}  // namespace detail

inline SparseOperator assemble_mass(const TriMesh& mesh) {
    return detail::assemble_scalar(mesh, [&](Index t) { return element_mass(mesh.area(t)); });
}

/// Row sums of the consistent mass: each node's share of the surrounding area.
inline ScalarField lumped_mass(const TriMesh& mesh) { return lumped_areas(mesh); }

inline SparseOperator assemble_stiffness(const TriMesh& mesh) {
    return detail::assemble_scalar(mesh, [&](Index t) { return element_stiffness(element_geometry(mesh, t)); });
}

inline SparseOperator assemble_drag(const TriMesh& mesh, const ScalarField& speed) {
    detail::require_size(mesh, speed.size(), "speed field");
    for (Eigen::Index k = 0; k < speed.size(); ++k)
        if (!(speed(k) >= 0.0))
            throw ContractViolation("drag weight must be non-negative (node " + std::to_string(k) + ")");
    return detail::assemble_scalar(mesh, [&](Index t) {
        return element_weighted_mass(mesh.area(t), detail::gather(speed, mesh.triangle(t)));
    });
}

/// Load L_k = int (grad eta) . phi_k, evaluated on the elementwise-constant
/// gradient without integration by parts.
inline VectorField assemble_grad_pressure(const TriMesh& mesh, const ScalarField& eta) {
    detail::require_size(mesh, eta.size(), "eta field");
    VectorField load = VectorField::Zero(eta.size(), 2);
    for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
        const auto& tri = mesh.triangle(t);
        const ElementLoad le = element_gradient_load(element_geometry(mesh, t), detail::gather(eta, tri));
        for (int i = 0; i < 3; ++i) load.row(tri[i]) += le.row(i);
    }
    return load;
}

/// Load L_k = -int h div(phi_k e), the integrated-by-parts pairing with no
/// boundary term.
inline VectorField assemble_divergence_pressure(const TriMesh& mesh, const ScalarField& h) {
    detail::require_size(mesh, h.size(), "thickness field");
    VectorField load = VectorField::Zero(h.size(), 2);
    for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
        const auto& tri = mesh.triangle(t);
        const ElementLoad le = element_divergence_load(element_geometry(mesh, t), detail::gather(h, tri));
        for (int i = 0; i < 3; ++i) load.row(tri[i]) += le.row(i);
    }
    return load;
}

/// Lumped-mass L2 projection of the elementwise divergence onto P1.
inline ScalarField project_divergence(const TriMesh& mesh, const VectorField& u) {
    detail::require_size(mesh, u.rows(), "velocity field");
    ScalarField num = ScalarField::Zero(u.rows());
    ScalarField den = ScalarField::Zero(u.rows());
    for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
        const auto& tri = mesh.triangle(t);
        const ElementGeometry g = element_geometry(mesh, t);
        double div = 0.0;
        for (int i = 0; i < 3; ++i) div += g.grad[static_cast<std::size_t>(i)].dot(u.row(tri[i]).transpose());
        for (Index v : tri) {
            num(v) += g.area / 3.0 * div;
            den(v) += g.area / 3.0;
        }
    }
    return num.cwiseQuotient(den);
}

inline constexpr double kDefaultSolveTolerance = 1e-10;

/// Factorizes a symmetric positive-definite operator once and solves for any
/// number of right-hand sides, enforcing a relative-residual bound on each.
class SpdSolver {
public:
    explicit SpdSolver(SparseOperator a, double tol = kDefaultSolveTolerance) : a_(std::move(a)), tol_(tol) {
        if (a_.rows() != a_.cols()) throw ContractViolation("SPD solve needs a square operator");
        a_.makeCompressed();
        ldlt_.compute(a_);
        if (ldlt_.info() != Eigen::Success) throw SolverError("sparse LDLT factorization failed", 1.0);
        // A non-positive pivot means the operator is not positive definite.
        if ((ldlt_.vectorD().array() <= 0.0).any()) throw SolverError("operator is not positive definite", 1.0);
    }

    template <typename Rhs>
    [[nodiscard]] Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> solve(const Rhs& rhs) const {
        using Result = Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime>;
        if (rhs.rows() != a_.rows()) throw ContractViolation("right-hand side size mismatch");
        Result x = ldlt_.solve(rhs);
        for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
            const double bnorm = rhs.col(c).norm();
            double res = relative_residual(x.col(c), rhs.col(c), bnorm);
            if (res > tol_) {
                // Polish with diagonally preconditioned CG from the direct solution.
                Eigen::ConjugateGradient<SparseOperator, Eigen::Lower | Eigen::Upper> cg(a_);
                cg.setTolerance(tol_ * 0.1);
                cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * a_.rows()));
                Eigen::VectorXd col = cg.solveWithGuess(rhs.col(c), Eigen::VectorXd(x.col(c)));
                x.col(c) = col;
                res = relative_residual(x.col(c), rhs.col(c), bnorm);
                if (res > tol_) throw SolverError("SPD solve did not reach tolerance", res);
            }
        }
        return x;
    }

    [[nodiscard]] const SparseOperator& matrix() const noexcept { return a_; }

private:
    template <typename X, typename B>
    double relative_residual(const X& x, const B& b, double bnorm) const {
        const double r = (a_ * x - b).norm();
        return bnorm > 0.0 ? r / bnorm : r;
    }

    SparseOperator a_;
    double tol_;
    Eigen::SimplicialLDLT<SparseOperator> ldlt_;
};

inline Eigen::VectorXd solve_spd(const SparseOperator& a, const Eigen::VectorXd& rhs,
                                 double tol = kDefaultSolveTolerance) {
    return SpdSolver(a, tol).solve(rhs);
}

/// Componentwise discrete harmonic extension of boundary data (one row per
/// boundary-loop node, in loop order) into the interior.
inline VectorField solve_laplace_dirichlet(const TriMesh& mesh, const VectorField& boundary_values,
                                           double tol = kDefaultSolveTolerance) {
    const auto loop = mesh.boundary_loop();
    if (static_cast<std::size_t>(boundary_values.rows()) != loop.size())
        throw ContractViolation("boundary data must cover every boundary node");
    const auto n = static_cast<Index>(mesh.vertex_count());
    VectorField result(n, 2);
    for (std::size_t i = 0; i < loop.size(); ++i) result.row(loop[i]) = boundary_values.row(static_cast<Index>(i));

    std::vector<Index> interior_id(static_cast<std::size_t>(n), -1);
    Index ni = 0;
    for (Index v = 0; v < n; ++v)
        if (!mesh.is_boundary(v)) interior_id[static_cast<std::size_t>(v)] = ni++;
    if (ni == 0) return result;

    const SparseOperator k = assemble_stiffness(mesh);
    std::vector<Eigen::Triplet<double>> trips;
    VectorField rhs = VectorField::Zero(ni, 2);
    for (Index col = 0; col < k.outerSize(); ++col) {
        for (SparseOperator::InnerIterator it(k, col); it; ++it) {
            const Index r = interior_id[static_cast<std::size_t>(it.row())];
            if (r < 0) continue;
            const Index c = interior_id[static_cast<std::size_t>(it.col())];
            if (c >= 0)
                trips.emplace_back(r, c, it.value());
            else
                rhs.row(r) -= it.value() * result.row(static_cast<Index>(it.col()));
        }
    }
    SparseOperator kii(ni, ni);
    kii.setFromTriplets(trips.begin(), trips.end());
    const VectorField xi = SpdSolver(std::move(kii), tol).solve(rhs);
    for (Index v = 0; v < n; ++v)
        if (const Index r = interior_id[static_cast<std::size_t>(v)]; r >= 0) result.row(v) = xi.row(r);
    return result;
}

/// Coordinate-format dump, one "row col value" triple per line.
inline void write_coordinate_format(std::ostream& os, const SparseOperator& op) {
    const auto old_precision = os.precision(17);
    for (Index col = 0; col < op.outerSize(); ++col)
        for (SparseOperator::InnerIterator it(op, col); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os.precision(old_precision);
}

}  // namespace swale
