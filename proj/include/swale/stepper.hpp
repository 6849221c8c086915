#pragma once

// One ALE time step of the viscous shallow-water system.
//
// Sequence per step, all on the current mesh before it moves:
//   1. mesh velocity C = harmonic extension of the boundary trace of u;
//   2. feet x - (u - C) dt, pulled-back fields u~ and h~;
//   3. Picard iteration between the log-form continuity update and the
//      implicit momentum solve;
//   4. nodes moved by dt * C, depth re-sampled at the new positions.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "swale/contact_line.hpp"
#include "swale/errors.hpp"
#include "swale/fem.hpp"
#include "swale/mesh.hpp"
#include "swale/model.hpp"
#include "swale/transport.hpp"

namespace swale {

struct StepReport {
    int fixed_point_iterations = 0;
    double momentum_residual = 0.0;
    /// Largest |log(h_new / h~)| over interior nodes.
    double continuity_update_max = 0.0;
    MeshQualityReport mesh_quality;
};

/// Body force: amplitude * direction while 0 < t < duration, zero otherwise.
inline Vec2 forcing(double t, const ScenarioSpec& spec) {
    if (t > 0.0 && t < spec.forcing_duration) return spec.forcing_amplitude * spec.forcing_direction;
    return Vec2::Zero();
}

/// h_new = h~ exp(-dt div u) at interior nodes (floored at h_min), exactly 0 on
/// the boundary loop.
inline ScalarField continuity_update(const TriMesh& mesh, const ScalarField& h_tilde, const VectorField& u_iter,
                                     double dt, double h_min) {
    const ScalarField div = project_divergence(mesh, u_iter);
    ScalarField h(h_tilde.size());
    for (Index v = 0; v < static_cast<Index>(h.size()); ++v) {
        if (mesh.is_boundary(v)) {
            h(v) = 0.0;
            continue;
        }
        if (!std::isfinite(div(v))) throw StepError("non-finite divergence at node " + std::to_string(v));
        h(v) = std::max(h_tilde(v) * std::exp(-dt * div(v)), h_min);
    }
    return h;
}

/// The linear momentum system of one step. The matrix depends only on the
/// pulled-back velocity, so it is factorized once and reused for every
/// fixed-point iterate of the thickness.
class MomentumSystem {
public:
    MomentumSystem(const TriMesh& mesh, const ScalarField& topo, const VectorField& u_tilde, const Vec2& force,
                   double dt, const ScenarioSpec& spec, const BoundaryOperator* boundary)
        : mesh_(&mesh), topo_(&topo), dt_(dt), gravity_(spec.gravity), form_(spec.pressure_form) {
        if (!(dt > 0.0)) throw ContractViolation("momentum system needs dt > 0");
        const SparseOperator mass = assemble_mass(mesh);
        SparseOperator a = mass;
        if (spec.nu > 0.0) a += (dt * spec.nu) * assemble_stiffness(mesh);
        if (spec.cd > 0.0) {
            const ScalarField speed = u_tilde.rowwise().norm();
            a += (dt * spec.cd) * assemble_drag(mesh, speed);
        }
        VectorField forced = u_tilde;
        forced.rowwise() += dt * force.transpose();
        base_rhs_ = mass * forced;

        const double strength = spec.contact_line_strength();
        if (boundary != nullptr && strength > 0.0) {
            const auto loop = mesh.boundary_loop();
            VectorField trace(static_cast<Eigen::Index>(loop.size()), 2);
            for (std::size_t i = 0; i < loop.size(); ++i) trace.row(static_cast<Index>(i)) = u_tilde.row(loop[i]);
            const BoundarySystemTerms terms = boundary_system_terms(*boundary, trace, dt, strength);
            std::vector<Eigen::Triplet<double>> trips;
            for (Index col = 0; col < terms.lhs.outerSize(); ++col)
                for (SparseOperator::InnerIterator it(terms.lhs, col); it; ++it)
                    trips.emplace_back(loop[static_cast<std::size_t>(it.row())], loop[static_cast<std::size_t>(it.col())],
                                       it.value());
            SparseOperator embedded(a.rows(), a.cols());
            embedded.setFromTriplets(trips.begin(), trips.end());
            a += embedded;
            for (std::size_t i = 0; i < loop.size(); ++i) base_rhs_.row(loop[i]) += terms.rhs.row(static_cast<Index>(i));
        }
        solver_.emplace(std::move(a));
    }

    /// Velocity for a given new thickness.
    [[nodiscard]] VectorField solve(const ScalarField& h_new) const {
        const VectorField rhs = right_hand_side(h_new);
        return solver_->solve(rhs);
    }

    [[nodiscard]] VectorField right_hand_side(const ScalarField& h_new) const {
        const VectorField load = form_ == PressureForm::gradient
                                     ? assemble_grad_pressure(*mesh_, ScalarField(h_new - *topo_))
                                     : assemble_divergence_pressure(*mesh_, h_new);
        return base_rhs_ - (dt_ * gravity_) * load;
    }

    [[nodiscard]] double relative_residual(const VectorField& u, const ScalarField& h_new) const {
        const VectorField rhs = right_hand_side(h_new);
        const double bnorm = rhs.norm();
        const double r = (matrix() * u - rhs).norm();
        return bnorm > 0.0 ? r / bnorm : r;
    }

    [[nodiscard]] const SparseOperator& matrix() const { return solver_->matrix(); }

private:
    const TriMesh* mesh_;
    const ScalarField* topo_;
    double dt_;
    double gravity_;
    PressureForm form_;
    VectorField base_rhs_;
    std::optional<SpdSolver> solver_;
};

/// Single implicit momentum solve for a given thickness. With dt = 0 the
/// system reduces to the identity on u~.
inline VectorField momentum_solve(const TriMesh& mesh, const VectorField& u_tilde, const ScalarField& h_new,
                                  const ScalarField& topo, const Vec2& force, double dt, const ScenarioSpec& spec,
                                  const BoundaryOperator* boundary = nullptr) {
    if (dt == 0.0) return u_tilde;
    if (!(spec.nu >= 0.0 && spec.cd >= 0.0)) throw ContractViolation("nu and cd must be non-negative");
    return MomentumSystem(mesh, topo, u_tilde, force, dt, spec, boundary).solve(h_new);
}

inline double lumped_l2_norm(const ScalarField& lumped, const VectorField& u) {
    return std::sqrt((lumped.array() * u.rowwise().squaredNorm().array()).sum());
}

struct FixedPointResult {
    VectorField u;
    ScalarField h;
    StepReport report;
};

/// Picard iteration from u = u~: continuity update with the current velocity,
/// then momentum solve with the resulting thickness, until the relative L2
/// change drops below fp_tol.
inline FixedPointResult fixed_point_step(const TriMesh& mesh, const ScalarField& topo, const VectorField& u_tilde,
                                         const ScalarField& h_tilde, double t_next, const ScenarioSpec& spec,
                                         const BoundaryOperator* boundary) {
    const double dt = spec.dt;
    const MomentumSystem system(mesh, topo, u_tilde, forcing(t_next, spec), dt, spec, boundary);
    const ScalarField lumped = lumped_mass(mesh);
    // Below an RMS speed of 1e-6 m/s the change is measured against that
    // speed instead, so round-off around a state at rest counts as converged.
    const double floor = 1e-6 * std::sqrt(lumped.sum());

    FixedPointResult out;
    VectorField u = u_tilde;
    double change = 0.0;
    for (int k = 1; k <= spec.fp_max; ++k) {
        const ScalarField h = continuity_update(mesh, h_tilde, u, dt, spec.h_min);
        VectorField next = system.solve(h);
        if (spec.relaxation != 1.0) next = (1.0 - spec.relaxation) * u + spec.relaxation * next;
        if (!next.allFinite()) throw StepError("non-finite velocity in fixed-point iterate");
        change = lumped_l2_norm(lumped, next - u) / std::max(lumped_l2_norm(lumped, u), floor);
        u = std::move(next);
        if (change < spec.fp_tol) {
            out.report.fixed_point_iterations = k;
            break;
        }
        if (k == spec.fp_max) throw FixedPointDiverged(k, change);
    }
    out.h = continuity_update(mesh, h_tilde, u, dt, spec.h_min);
    out.report.momentum_residual = system.relative_residual(u, out.h);
    for (Index v = 0; v < static_cast<Index>(out.h.size()); ++v)
        if (!mesh.is_boundary(v))
            out.report.continuity_update_max =
                std::max(out.report.continuity_update_max, std::abs(std::log(out.h(v) / std::max(h_tilde(v), spec.h_min))));
    out.u = std::move(u);
    return out;
}

/// Boundary trace of a nodal vector field, in loop order.
inline VectorField boundary_trace(const TriMesh& mesh, const VectorField& field) {
    const auto loop = mesh.boundary_loop();
    VectorField trace(static_cast<Eigen::Index>(loop.size()), 2);
    for (std::size_t i = 0; i < loop.size(); ++i) trace.row(static_cast<Index>(i)) = field.row(loop[i]);
    return trace;
}

/// Harmonic extension of the boundary fluid velocity.
inline VectorField mesh_velocity(const TriMesh& mesh, const VectorField& u) {
    return solve_laplace_dirichlet(mesh, boundary_trace(mesh, u));
}

inline std::pair<SimState, StepReport> advance(const SimState& state, const ScenarioSpec& spec,
                                               const BoundaryOperator* boundary) {
    const TriMesh& mesh = state.mesh;
    const double dt = spec.dt;
    const long next_step = state.step + 1;

    const VectorField c = mesh_velocity(mesh, state.u);
    const std::vector<FootLocation> feet = compute_feet(mesh, VectorField(state.u - c), dt);
    const VectorField u_tilde = pullback(mesh, state.u, feet);
    ScalarField h_tilde = pullback(mesh, state.h, feet);
    for (Index v : mesh.boundary_loop()) h_tilde(v) = 0.0;

    const double t_next = static_cast<double>(next_step) * dt;
    FixedPointResult fp = fixed_point_step(mesh, state.topo, u_tilde, h_tilde, t_next, spec, boundary);

    std::optional<TriMesh> moved;
    try {
        moved.emplace(move_nodes(mesh, c, dt));
    } catch (const MeshTangled& e) {
        throw e.at_step(next_step);
    }
    if (const auto hit = find_boundary_self_intersection(*moved)) throw BoundaryCollision(hit->first, hit->second, next_step);

    SimState next{std::move(*moved), std::move(fp.u), std::move(fp.h), {}, t_next, next_step, state.probe_node,
                  state.potential_reference};
    next.topo = sample_depth(next.mesh, spec.depth);
    fp.report.mesh_quality = quality(next.mesh);
    return {std::move(next), fp.report};
}

inline std::pair<SimState, StepReport> advance(const SimState& state, const ScenarioSpec& spec) {
    const BoundaryOperator op = build_boundary_operator(state.mesh);
    return advance(state, spec, &op);
}

/// Owns the evolving state together with the boundary operator, which is
/// built once from the reference curve.
class Simulation {
public:
    Simulation(ScenarioSpec spec, SimState initial)
        : spec_(std::move(spec)), state_(std::move(initial)), boundary_(build_boundary_operator(state_.mesh)) {
        spec_.validate();
    }

    const StepReport& step() {
        auto [next, report] = advance(state_, spec_, &boundary_);
        state_ = std::move(next);
        last_report_ = report;
        return last_report_;
    }

    [[nodiscard]] const SimState& state() const noexcept { return state_; }
    [[nodiscard]] const ScenarioSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const BoundaryOperator& boundary_operator() const noexcept { return boundary_; }
    [[nodiscard]] const StepReport& last_report() const noexcept { return last_report_; }

    /// Number of steps needed to reach t_end.
    [[nodiscard]] long total_steps() const { return std::lround(spec_.t_end / spec_.dt); }

private:
    ScenarioSpec spec_;
    SimState state_;
    BoundaryOperator boundary_;
    StepReport last_report_;
};

}  // namespace swale
