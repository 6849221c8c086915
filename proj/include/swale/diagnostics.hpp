#pragma once

#include <cmath>
#include <utility>

#include "swale/errors.hpp"
#include "swale/fem.hpp"
#include "swale/model.hpp"
#include "swale/stepper.hpp"

namespace swale {

/// int 1/2 h |u|^2, lumped.
inline double kinetic_energy(const SimState& s) {
    const ScalarField m = lumped_mass(s.mesh);
    return 0.5 * (m.array() * s.h.array() * s.u.rowwise().squaredNorm().array()).sum();
}

/// Gravitational potential energy relative to the rest state:
/// g int (h^2/2 - h depth) + g int_rest depth^2/2 = g/2 int (eta^2 - depth^2) + const.
/// On a fixed domain this differs from g/2 int eta^2 only by a constant.
inline double potential_energy(const SimState& s, double gravity) {
    return gravity * (raw_potential(s) + s.potential_reference);
}

/// int h, lumped, on the current mesh.
inline double total_mass(const SimState& s) { return lumped_mass(s.mesh).dot(s.h); }

struct ProbeReading {
    double radius = 0.0;
    /// Ground elevation under the node (-depth): the level of the contact line.
    double ground_level = 0.0;
};

inline ProbeReading probe_boundary(const SimState& s, Index node, const RadialCubic& depth) {
    if (node < 0 || node >= static_cast<Index>(s.mesh.vertex_count()) || !s.mesh.is_boundary(node))
        throw ContractViolation("probe node " + std::to_string(node) + " is not on the boundary");
    const Vec2& x = s.mesh.vertex(node);
    // + 0.0 turns a negative zero into zero.
    return {x.norm(), -depth.at(x) + 0.0};
}

struct DiagnosticsRow {
    double t = 0.0;
    double kinetic = 0.0;
    double potential = 0.0;
    double mass = 0.0;
    double probe_radius = 0.0;
    double probe_ground_level = 0.0;
    int fp_iters = 0;
    double min_area = 0.0;
};

inline DiagnosticsRow diagnostics(const SimState& s, const ScenarioSpec& spec, int fp_iters) {
    const ProbeReading p = probe_boundary(s, s.probe_node, spec.depth);
    return {s.t,      kinetic_energy(s), potential_energy(s, spec.gravity), total_mass(s), p.radius, p.ground_level,
            fp_iters, quality(s.mesh).min_signed_area};
}

}  // namespace swale
