#include <cmath>

#include <gtest/gtest.h>

#include "support/meshes.hpp"
#include "swale/contact_line.hpp"
#include "swale/diagnostics.hpp"
#include "swale/errors.hpp"
#include "swale/fem.hpp"
#include "swale/model.hpp"
#include "swale/scenarios.hpp"
#include "swale/stepper.hpp"

using namespace swale;

namespace {

/// Flat-bottomed disk of uniform depth with every physical term switched off.
ScenarioSpec inert_spec() {
    ScenarioSpec spec;
    spec.domain_radius = 10.0;
    spec.mesh_target = 200;
    spec.depth.coeffs = {1.0, 0.0, 0.0, 0.0};
    spec.nu = 0.0;
    spec.cd = 0.0;
    spec.forcing_amplitude = 0.0;
    spec.contact_line_enabled = false;
    return spec;
}

VectorField constant_field(Index n, const Vec2& v) {
    VectorField out(n, 2);
    out.rowwise() = v.transpose();
    return out;
}

}  // namespace

TEST(Forcing, ActiveStrictlyInsideTheWindow) {
    const ScenarioSpec spec = test1_spec();
    EXPECT_EQ(forcing(10.0, spec), Vec2(1, 0));
    EXPECT_EQ(forcing(25.0, spec), Vec2(0, 0));
    EXPECT_EQ(forcing(0.0, spec), Vec2(0, 0));
    EXPECT_EQ(forcing(20.0, spec), Vec2(0, 0));
}

TEST(Forcing, FollowsConfiguredDirectionAndAmplitude) {
    ScenarioSpec spec = test1_spec();
    spec.forcing_direction = Vec2(0, -1);
    spec.forcing_amplitude = 2.5;
    EXPECT_EQ(forcing(1.0, spec), Vec2(0, -2.5));
}

TEST(ContinuityUpdate, DivergenceFreeKeepsThickness) {
    const TriMesh mesh = build_disk_mesh(10.0, 200);
    const auto n = static_cast<Index>(mesh.vertex_count());
    ScalarField h_tilde = ScalarField::Constant(n, 0.8);
    const ScalarField h = continuity_update(mesh, h_tilde, constant_field(n, {0.3, 0.2}), 0.05, 1e-6);
    for (Index v = 0; v < n; ++v) EXPECT_NEAR(h(v), mesh.is_boundary(v) ? 0.0 : 0.8, 1e-14);
}

TEST(ContinuityUpdate, UniformDivergenceDecaysExponentially) {
    const TriMesh mesh = build_disk_mesh(10.0, 200);
    const auto n = static_cast<Index>(mesh.vertex_count());
    VectorField u(n, 2);
    for (Index v = 0; v < n; ++v) u.row(v) = mesh.vertex(v).transpose();  // div = 2
    const ScalarField h = continuity_update(mesh, ScalarField::Ones(n), u, 0.1, 1e-6);
    for (Index v = 0; v < n; ++v) {
        if (mesh.is_boundary(v))
            EXPECT_EQ(h(v), 0.0);
        else
            EXPECT_NEAR(h(v), std::exp(-0.2), 1e-12);
    }
}

TEST(ContinuityUpdate, FloorsAtMinimumThickness) {
    const TriMesh mesh = build_disk_mesh(10.0, 200);
    const auto n = static_cast<Index>(mesh.vertex_count());
    VectorField u(n, 2);
    for (Index v = 0; v < n; ++v) u.row(v) = 100.0 * mesh.vertex(v).transpose();
    const ScalarField h = continuity_update(mesh, ScalarField::Ones(n), u, 1.0, 1e-3);
    for (Index v = 0; v < n; ++v)
        if (!mesh.is_boundary(v)) {
            EXPECT_EQ(h(v), 1e-3);
        }
}

TEST(ContinuityUpdate, NonFiniteDivergenceIsAStepError) {
    const TriMesh mesh = build_disk_mesh(10.0, 200);
    const auto n = static_cast<Index>(mesh.vertex_count());
    VectorField u = VectorField::Zero(n, 2);
    u(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(continuity_update(mesh, ScalarField::Ones(n), u, 0.1, 1e-6), StepError);
}

TEST(MomentumSolve, ZeroDtReturnsPulledBackVelocity) {
    const TriMesh mesh = build_disk_mesh(10.0, 200);
    const auto n = static_cast<Index>(mesh.vertex_count());
    const VectorField u = constant_field(n, {0.4, -0.1});
    const ScalarField zero = ScalarField::Zero(n);
    EXPECT_EQ(momentum_solve(mesh, u, zero, zero, {1, 0}, 0.0, test1_spec()), u);
}

TEST(MomentumSolve, RestStateStaysAtRest) {
    const ScenarioSpec spec = test1_spec();
    const SimState s = build_state(spec);
    const auto n = static_cast<Index>(s.mesh.vertex_count());
    const BoundaryOperator op = build_boundary_operator(s.mesh);
    const VectorField u = momentum_solve(s.mesh, VectorField::Zero(n, 2), s.h, s.topo, Vec2::Zero(), 0.05, spec, &op);
    EXPECT_LT(u.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MomentumSolve, PureForcingGivesUniformVelocity) {
    ScenarioSpec spec = inert_spec();
    const TriMesh mesh = build_disk_mesh(10.0, 200);
    const auto n = static_cast<Index>(mesh.vertex_count());
    const ScalarField zero = ScalarField::Zero(n);
    const VectorField u = momentum_solve(mesh, VectorField::Zero(n, 2), zero, zero, {1, 0}, 0.05, spec);
    for (Index v = 0; v < n; ++v) {
        EXPECT_NEAR(u(v, 0), 0.05, 1e-14);
        EXPECT_NEAR(u(v, 1), 0.0, 1e-14);
    }
}

TEST(MomentumSolve, RejectsNegativeCoefficients) {
    ScenarioSpec spec = inert_spec();
    spec.cd = -1.0;
    const TriMesh mesh = fixtures::square_grid(2);
    const ScalarField zero = ScalarField::Zero(9);
    EXPECT_THROW(momentum_solve(mesh, VectorField::Zero(9, 2), zero, zero, {1, 0}, 0.1, spec), ContractViolation);
}

TEST(MomentumSystem, IsSymmetricPositiveDefiniteWithContactLine) {
    for (double kappa : {0.0, 1.0, 10.0}) {
        ScenarioSpec spec = test1_spec();
        spec.contact_line_kappa = kappa;
        const SimState s = build_state(spec);
        const BoundaryOperator op = build_boundary_operator(s.mesh);
        const auto n = static_cast<Index>(s.mesh.vertex_count());
        VectorField u(n, 2);
        for (Index v = 0; v < n; ++v) u.row(v) << std::sin(0.05 * s.mesh.vertex(v).y()), 0.2;
        const MomentumSystem sys(s.mesh, s.topo, u, Vec2::Zero(), 0.05, spec, &op);
        const Eigen::MatrixXd a(sys.matrix());
        EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0) << kappa;
    }
}

TEST(FixedPoint, RestStateConvergesImmediately) {
    const ScenarioSpec spec = test1_spec();
    const SimState s = build_state(spec);
    const BoundaryOperator op = build_boundary_operator(s.mesh);
    const auto n = static_cast<Index>(s.mesh.vertex_count());
    const FixedPointResult r = fixed_point_step(s.mesh, s.topo, VectorField::Zero(n, 2), s.h, 25.0, spec, &op);
    EXPECT_EQ(r.report.fixed_point_iterations, 1);
    EXPECT_LT(r.u.cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((r.h - s.h).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FixedPoint, SmallDtNeedsFewIterations) {
    ScenarioSpec spec = test1_spec();
    const SimState s = build_state(spec);
    const BoundaryOperator op = build_boundary_operator(s.mesh);
    const auto n = static_cast<Index>(s.mesh.vertex_count());
    const VectorField u = constant_field(n, {0.5, 0.0});
    spec.dt = 1e-3;
    const int small = fixed_point_step(s.mesh, s.topo, u, s.h, 1.0, spec, &op).report.fixed_point_iterations;
    spec.dt = 1.0;
    const int large = fixed_point_step(s.mesh, s.topo, u, s.h, 1.0, spec, &op).report.fixed_point_iterations;
    EXPECT_LE(small, 3);
    EXPECT_LE(small, large);
}

TEST(FixedPoint, IterationCapIsReported) {
    ScenarioSpec spec = test1_spec();
    spec.fp_max = 1;
    spec.fp_tol = 1e-300;
    const SimState s = build_state(spec);
    const BoundaryOperator op = build_boundary_operator(s.mesh);
    const auto n = static_cast<Index>(s.mesh.vertex_count());
    try {
        fixed_point_step(s.mesh, s.topo, constant_field(n, {0.5, 0.0}), s.h, 1.0, spec, &op);
        FAIL() << "expected FixedPointDiverged";
    } catch (const FixedPointDiverged& e) {
        EXPECT_EQ(e.iterations(), 1);
        EXPECT_GT(e.last_change(), 0.0);
    }
}

TEST(Advance, RestStateOnlyAdvancesClock) {
    ScenarioSpec spec = test1_spec();
    spec.forcing_amplitude = 0.0;
    const SimState s0 = build_state(spec);
    const auto [s1, report] = advance(s0, spec);
    EXPECT_EQ(s1.step, 1);
    EXPECT_DOUBLE_EQ(s1.t, 0.05);
    EXPECT_LT(s1.u.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s1.h - s0.h).cwiseAbs().maxCoeff(), 1e-12);
    for (Index v = 0; v < static_cast<Index>(s0.mesh.vertex_count()); ++v)
        EXPECT_LT((s1.mesh.vertex(v) - s0.mesh.vertex(v)).norm(), 1e-12);
    EXPECT_EQ(report.fixed_point_iterations, 1);
}

TEST(Advance, UniformFlowTranslatesTheMesh) {
    const ScenarioSpec spec = inert_spec();
    SimState s = build_state(spec);
    const auto n = static_cast<Index>(s.mesh.vertex_count());
    // Flat surface over flat ground, interior thickness 1 and boundary 0; the
    // pressure load is switched off through g -> tiny so only transport acts.
    ScenarioSpec weightless = spec;
    weightless.gravity = 1e-300;
    s.u = constant_field(n, {2.0, -1.0});
    const SimState start = s;
    for (int k = 0; k < 3; ++k) s = advance(s, weightless).first;
    for (Index v = 0; v < n; ++v) {
        EXPECT_NEAR(s.mesh.vertex(v).x(), start.mesh.vertex(v).x() + 3 * 0.05 * 2.0, 1e-10);
        EXPECT_NEAR(s.mesh.vertex(v).y(), start.mesh.vertex(v).y() - 3 * 0.05 * 1.0, 1e-10);
        EXPECT_NEAR(s.u(v, 0), 2.0, 1e-10);
        EXPECT_NEAR(s.u(v, 1), -1.0, 1e-10);
    }
    EXPECT_NEAR(s.t, 0.15, 1e-15);
}

TEST(Advance, BoundaryStaysPinnedAndInteriorPositive) {
    auto [spec, s] = build_test1(MeshVariant::M1);
    for (int k = 0; k < 20; ++k) {
        s = advance(s, spec).first;
        for (Index v = 0; v < static_cast<Index>(s.mesh.vertex_count()); ++v) {
            if (s.mesh.is_boundary(v))
                EXPECT_EQ(s.h(v), 0.0);
            else
                EXPECT_GE(s.h(v), spec.h_min);
        }
    }
}

TEST(Advance, FirstForcedStepBarelyChangesMass) {
    auto [spec, s] = build_test1(MeshVariant::M1);
    const double m0 = total_mass(s);
    const SimState s1 = advance(s, spec).first;
    EXPECT_LT(std::abs(total_mass(s1) - m0) / m0, 1e-3);
}

TEST(Advance, TanglingReportsTheStep) {
    ScenarioSpec spec = inert_spec();
    spec.gravity = 1e-300;
    spec.dt = 1.0;
    SimState s = build_state(spec);
    s.step = 41;
    s.t = 41.0;
    const auto n = static_cast<Index>(s.mesh.vertex_count());
    // Every node reaches the origin after one step.
    for (Index v = 0; v < n; ++v) s.u.row(v) = -s.mesh.vertex(v).transpose();
    try {
        advance(s, spec);
        FAIL() << "expected MeshTangled";
    } catch (const MeshTangled& e) {
        EXPECT_EQ(e.step(), 42);
    }
}

TEST(Simulation, Test1IterationCountStaysSmall) {
    auto [spec, s] = build_test1(MeshVariant::M1);
    spec.t_end = 30.0;
    Simulation sim(spec, s);
    int worst = 0;
    for (long k = 0; k < sim.total_steps(); ++k) worst = std::max(worst, sim.step().fixed_point_iterations);
    EXPECT_LE(worst, 10);
    EXPECT_NEAR(sim.state().t, 30.0, 1e-9);
    EXPECT_EQ(sim.state().step, 600);
}
