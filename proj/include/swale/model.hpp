#pragma once

// Scenario description and the evolving simulation state.

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "swale/errors.hpp"
#include "swale/mesh.hpp"

namespace swale {

/// Rest-state water depth as a cubic in the distance from the origin:
/// depth(r) = c0 + c1 r + c2 r^2 + c3 r^3. Positive below the rest level,
/// negative where the ground rises above it. The ground elevation is -depth.
struct RadialCubic {
    std::array<double, 4> coeffs{1.0, 0.0, 0.0, 0.0};

    [[nodiscard]] double operator()(double r) const {
        return coeffs[0] + r * (coeffs[1] + r * (coeffs[2] + r * coeffs[3]));
    }
    [[nodiscard]] double derivative(double r) const {
        return coeffs[1] + r * (2.0 * coeffs[2] + r * 3.0 * coeffs[3]);
    }
    [[nodiscard]] double at(const Vec2& x) const { return (*this)(x.norm()); }
};

enum class PressureForm {
    /// g int (grad eta) . phi with eta = h - depth; preserves the lake at rest.
    gradient,
    /// -g int h div(phi), the integrated-by-parts thickness form.
    divergence,
};

struct ScenarioSpec {
    std::string name = "custom";
    RadialCubic depth;
    double initial_surface_level = 0.0;
    double domain_radius = 130.0;
    int mesh_target = 420;

    double gravity = 1.0;
    double nu = 0.01;
    double cd = 0.01;

    double forcing_amplitude = 1.0;
    Vec2 forcing_direction = Vec2(1.0, 0.0);
    double forcing_duration = 20.0;

    double dt = 0.05;
    double t_end = 200.0;
    int output_every = 20;
    int snapshot_every = 0;

    double fp_tol = 1e-8;
    int fp_max = 50;
    double relaxation = 1.0;
    double h_min = 1e-6;

    double contact_line_kappa = 1.0;
    bool contact_line_enabled = true;
    PressureForm pressure_form = PressureForm::gradient;

    /// Radius of the ground ridge for terrains that have one, 0 otherwise.
    double ridge_radius = 0.0;

    [[nodiscard]] double contact_line_strength() const {
        return contact_line_enabled ? contact_line_kappa : 0.0;
    }

    void validate() const {
        const auto require = [](bool ok, const char* key, const char* what) {
            if (!ok) throw ConfigError(what, key);
        };
        require(dt > 0.0 && std::isfinite(dt), "dt", "must be positive");
        require(t_end >= 0.0 && std::isfinite(t_end), "t_end", "must be non-negative");
        require(output_every >= 1, "output_every", "must be at least 1");
        require(snapshot_every >= 0, "snapshot_every", "must be non-negative");
        require(gravity > 0.0, "gravity", "must be positive");
        require(nu >= 0.0, "nu", "must be non-negative");
        require(cd >= 0.0, "cd", "must be non-negative");
        require(forcing_amplitude >= 0.0, "forcing_amplitude", "must be non-negative");
        require(forcing_duration >= 0.0, "forcing_duration", "must be non-negative");
        require(forcing_direction.allFinite(), "forcing_direction", "must be finite");
        require(fp_tol > 0.0, "fp_tol", "must be positive");
        require(fp_max >= 1, "fp_max", "must be at least 1");
        require(relaxation > 0.0 && relaxation <= 1.0, "relaxation", "must lie in (0, 1]");
        require(h_min > 0.0, "h_min", "must be positive");
        require(contact_line_kappa >= 0.0, "contact_line_kappa", "must be non-negative");
        require(domain_radius > 0.0, "domain_radius", "must be positive");
        require(mesh_target >= 16, "mesh_target", "must be at least 16");
    }
};

struct SimState {
    TriMesh mesh;
    VectorField u;
    /// Thickness: exactly zero on the boundary loop, at least h_min inside.
    ScalarField h;
    /// Rest-state depth sampled at the current node positions.
    ScalarField topo;
    double t = 0.0;
    long step = 0;
    /// Boundary node whose position is reported as the contact-line probe.
    Index probe_node = 0;
    /// int 1/2 depth^2 over the rest domain; offsets the potential energy so
    /// that it vanishes at rest.
    double potential_reference = 0.0;

    [[nodiscard]] ScalarField eta() const { return h - topo; }
};

inline ScalarField sample_depth(const TriMesh& mesh, const RadialCubic& depth) {
    ScalarField d(static_cast<Eigen::Index>(mesh.vertex_count()));
    for (Index v = 0; v < static_cast<Index>(mesh.vertex_count()); ++v) d(v) = depth.at(mesh.vertex(v));
    return d;
}

/// int 1/2 (h^2 - 2 h depth) = int 1/2 (eta^2 - depth^2), lumped, per unit g.
inline double raw_potential(const SimState& s) {
    const ScalarField eta = s.eta();
    return 0.5 * (lumped_areas(s.mesh).array() * (eta.array().square() - s.topo.array().square())).sum();
}

/// Fluid at rest at its surface level: u = 0, h = level + depth inside,
/// h = 0 on the boundary loop.
inline SimState make_rest_state(TriMesh mesh, const ScenarioSpec& spec) {
    SimState s{std::move(mesh), {}, {}, {}, 0.0, 0, 0, 0.0};
    const auto n = static_cast<Eigen::Index>(s.mesh.vertex_count());
    s.u = VectorField::Zero(n, 2);
    s.topo = sample_depth(s.mesh, spec.depth);
    s.h.resize(n);
    for (Index v = 0; v < n; ++v) {
        if (s.mesh.is_boundary(v)) {
            s.h(v) = 0.0;
        } else {
            const double h = spec.initial_surface_level + s.topo(v);
            if (!(h > 0.0))
                throw ContractViolation("initial thickness is not positive at interior node " + std::to_string(v));
            s.h(v) = std::max(h, spec.h_min);
        }
    }
    s.probe_node = s.mesh.boundary_loop()[0];
    s.potential_reference = -raw_potential(s);
    return s;
}

}  // namespace swale
