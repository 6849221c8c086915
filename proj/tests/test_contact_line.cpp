#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "swale/contact_line.hpp"
#include "swale/errors.hpp"
#include "swale/mesh.hpp"

using namespace swale;

namespace {

std::vector<Vec2> regular_polygon(int n, double radius = 1.0) {
    std::vector<Vec2> p;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * i / n;
        p.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return p;
}

double fourier_error(int n) {
    const BoundaryOperator op = build_boundary_operator(regular_polygon(n));
    const double perimeter = op.segment_lengths.sum();
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::cos(2.0 * std::numbers::pi * i / n);
    const double lambda = -std::pow(2.0 * std::numbers::pi / perimeter, 2);
    return (op.halfroot * v - lambda * v).norm() / (std::abs(lambda) * v.norm());
}

}  // namespace

TEST(BoundaryOperator, AnnihilatesConstants) {
    const BoundaryOperator op = build_boundary_operator(build_disk_mesh(130.0, 420));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.size);
    EXPECT_LT((op.halfroot * ones).norm(), 1e-12);
    EXPECT_LT((op.gram * ones).norm(), 1e-12);
}

TEST(BoundaryOperator, FourierModeEigenvalueConverges) {
    const double e16 = fourier_error(16);
    const double e64 = fourier_error(64);
    const double e256 = fourier_error(256);
    EXPECT_LT(e64, e16);
    EXPECT_LT(e256, e64);
    EXPECT_LT(e256, 0.02);
}

TEST(BoundaryOperator, ExactOnQuadraticsWithUniformSpacing) {
    // Quadratic in arclength on a uniform polygon: interior rows away from the
    // wrap-around see exactly s^2, whose second derivative is 2.
    const int n = 40;
    const BoundaryOperator op = build_boundary_operator(regular_polygon(n, 3.0));
    const double ds = op.segment_lengths(0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::pow(i * ds, 2);
    const Eigen::VectorXd d2 = op.halfroot * v;
    for (int i = 1; i < n - 1; ++i) EXPECT_NEAR(d2(i), 2.0, 1e-9);
}

TEST(BoundaryOperator, NonUniformRowsAreExactOnQuadratics) {
    // Three-point second difference with unequal spacing is exact on
    // quadratics too; check it through a stretched polygon.
    std::vector<Vec2> pts;
    double s = 0.0;
    std::vector<double> arclength;
    for (int i = 0; i < 12; ++i) {
        const double a = std::numbers::pi * (i + 0.3 * (i % 2)) / 6.0;
        pts.emplace_back(std::cos(a), std::sin(a));
    }
    const BoundaryOperator op = build_boundary_operator(pts);
    for (int i = 0; i < 12; ++i) {
        arclength.push_back(s);
        s += op.segment_lengths(i);
    }
    Eigen::VectorXd v(12);
    for (int i = 0; i < 12; ++i) v(i) = 0.5 * arclength[static_cast<std::size_t>(i)] * arclength[static_cast<std::size_t>(i)];
    const Eigen::VectorXd d2 = op.halfroot * v;
    for (int i = 1; i < 11; ++i) EXPECT_NEAR(d2(i), 1.0, 1e-12);
}

TEST(BoundaryOperator, GramIsSymmetricPositiveSemidefinite) {
    const BoundaryOperator op = build_boundary_operator(build_disk_mesh(130.0, 420));
    const Eigen::MatrixXd g(op.gram);
    EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-15 * g.cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12 * eig.eigenvalues().maxCoeff());
    const Eigen::MatrixXd h(op.halfroot);
    EXPECT_LT((g - h.transpose() * op.weights.asDiagonal() * h).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BoundaryOperator, WeightsSumToPerimeter) {
    const BoundaryOperator op = build_boundary_operator(regular_polygon(30, 2.0));
    EXPECT_NEAR(op.weights.sum(), op.segment_lengths.sum(), 1e-14);
}

TEST(BoundaryOperator, DegenerateSegmentIsRejected) {
    std::vector<Vec2> pts = regular_polygon(8);
    pts[3] = pts[2];
    EXPECT_THROW(build_boundary_operator(pts), ContractViolation);
    EXPECT_THROW(build_boundary_operator(regular_polygon(3)), ContractViolation);
}

TEST(BoundaryOperator, BuiltFromReferenceCurve) {
    const TriMesh mesh = build_disk_mesh(130.0, 420);
    VectorField vel = VectorField::Zero(static_cast<Index>(mesh.vertex_count()), 2);
    for (Index v = 0; v < vel.rows(); ++v) vel.row(v) << 0.01 * mesh.vertex(v).y(), 0.0;
    const TriMesh moved = move_nodes(mesh, vel, 1.0);
    EXPECT_EQ(Eigen::MatrixXd(build_boundary_operator(moved).gram), Eigen::MatrixXd(build_boundary_operator(mesh).gram));
}

TEST(BoundarySystemTerms, ConstantTraceGivesZeroRhs) {
    const BoundaryOperator op = build_boundary_operator(regular_polygon(20));
    VectorField u(20, 2);
    u.col(0).setConstant(1.5);
    u.col(1).setConstant(-2.0);
    EXPECT_LT(boundary_system_terms(op, u, 0.05).rhs.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(BoundarySystemTerms, DoublingDtHalvesBothTerms) {
    const BoundaryOperator op = build_boundary_operator(regular_polygon(20));
    VectorField u(20, 2);
    for (int i = 0; i < 20; ++i) u.row(i) << std::sin(0.3 * i), std::cos(0.7 * i);
    const auto a = boundary_system_terms(op, u, 0.05);
    const auto b = boundary_system_terms(op, u, 0.1);
    EXPECT_LT(Eigen::MatrixXd(a.lhs - 2.0 * b.lhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((a.rhs - 2.0 * b.rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BoundarySystemTerms, ZeroStrengthDisablesOperator) {
    const BoundaryOperator op = build_boundary_operator(regular_polygon(20));
    VectorField u(20, 2);
    for (int i = 0; i < 20; ++i) u.row(i) << i, -i;
    const auto t = boundary_system_terms(op, u, 0.05, 0.0);
    EXPECT_EQ(Eigen::MatrixXd(t.lhs).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.rhs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BoundarySystemTerms, RejectsBadArguments) {
    const BoundaryOperator op = build_boundary_operator(regular_polygon(20));
    const VectorField u = VectorField::Zero(20, 2);
    EXPECT_THROW(boundary_system_terms(op, u, 0.0), ContractViolation);
    EXPECT_THROW(boundary_system_terms(op, u, -1.0), ContractViolation);
    EXPECT_THROW(boundary_system_terms(op, VectorField::Zero(19, 2), 0.1), ContractViolation);
}
