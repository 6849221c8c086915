#pragma once

// The two axisymmetric bowl experiments.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "swale/errors.hpp"
#include "swale/mesh.hpp"
#include "swale/model.hpp"

namespace swale {

enum class MeshVariant { M1, M2, M3 };

inline int triangle_target(MeshVariant v) {
    switch (v) {
        case MeshVariant::M1: return 420;
        case MeshVariant::M2: return 470;
        case MeshVariant::M3: return 1002;
    }
    return 420;
}

inline MeshVariant parse_mesh_variant(const std::string& s) {
    if (s == "M1") return MeshVariant::M1;
    if (s == "M2") return MeshVariant::M2;
    if (s == "M3") return MeshVariant::M3;
    throw ConfigError("unknown mesh variant '" + s + "' (expected M1, M2 or M3)", "mesh");
}

inline constexpr double kTest1Radius = 130.0;
inline constexpr double kTest2RimRadius = 100.0;
inline constexpr double kTest2RidgeRadius = 120.0;
inline constexpr double kTest2CrownRadius = 200.0;

/// Parabolic bowl of radius 130 m: depth 1 - (r/130)^2, 1 m at the centre and
/// zero at the rim; unit forcing along +x for 20 s.
inline ScenarioSpec test1_spec(int mesh_target = 420) {
    ScenarioSpec spec;
    spec.name = "test1";
    spec.domain_radius = kTest1Radius;
    spec.depth.coeffs = {1.0, 0.0, -1.0 / (kTest1Radius * kTest1Radius), 0.0};
    spec.mesh_target = mesh_target;
    spec.gravity = 1.0;
    spec.nu = 0.01;
    spec.cd = 0.01;
    return spec;
}

/// Cubic depth profile d(r) = c0 + c1 r + c2 r^2 + c3 r^3 fixed by
///   d(0) = 1, d(rim) = 0, d'(ridge) = 0, d'(crown) = 0,
/// with rim < ridge < crown: the ground rises from the centre to a crest just
/// outside the rim, falls into a ring-shaped depression, and rises again.
inline RadialCubic fit_crown_profile(double rim, double ridge, double crown) {
    Eigen::Matrix4d a;
    a << 1, 0, 0, 0,                                   //
        1, rim, rim * rim, rim * rim * rim,            //
        0, 1, 2 * ridge, 3 * ridge * ridge,            //
        0, 1, 2 * crown, 3 * crown * crown;
    const Eigen::Vector4d b(1.0, 0.0, 0.0, 0.0);
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(a);
    if (!lu.isInvertible()) throw ContractViolation("crown profile constraints are singular");
    const Eigen::Vector4d c = lu.solve(b);
    RadialCubic p;
    p.coeffs = {c(0), c(1), c(2), c(3)};
    // Crest: strict ground maximum (depth minimum) above the rest level.
    // Crown: strict ground minimum (depth maximum) below it.
    const auto curvature = [&](double r) { return 2.0 * c(2) + 6.0 * c(3) * r; };
    if (!(rim < ridge && ridge < crown) || !(p(ridge) < 0.0) || !(curvature(ridge) > 0.0) || !(p(crown) > 0.0) ||
        !(curvature(crown) < 0.0))
        throw ContractViolation("crown profile constraints are inconsistent");
    return p;
}

inline ScenarioSpec test2_spec(int mesh_target = 420) {
    ScenarioSpec spec = test1_spec(mesh_target);
    spec.name = "test2";
    spec.domain_radius = kTest2RimRadius;
    spec.depth = fit_crown_profile(kTest2RimRadius, kTest2RidgeRadius, kTest2CrownRadius);
    spec.ridge_radius = kTest2RidgeRadius;
    return spec;
}

inline SimState build_state(const ScenarioSpec& spec) {
    spec.validate();
    return make_rest_state(build_disk_mesh(spec.domain_radius, spec.mesh_target), spec);
}

inline std::pair<ScenarioSpec, SimState> build_test1(MeshVariant variant) {
    ScenarioSpec spec = test1_spec(triangle_target(variant));
    SimState state = build_state(spec);
    return {std::move(spec), std::move(state)};
}

inline std::pair<ScenarioSpec, SimState> build_test2(int mesh_target) {
    ScenarioSpec spec = test2_spec(mesh_target);
    SimState state = build_state(spec);
    return {std::move(spec), std::move(state)};
}

}  // namespace swale
