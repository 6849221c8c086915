#pragma once

// Semi-Lagrangian transport: characteristic feet and P1 pullback.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "swale/errors.hpp"
#include "swale/mesh.hpp"

namespace swale {

inline constexpr double kBarycentricTolerance = 1e-12;

struct FootLocation {
    Vec2 point = Vec2::Zero();
    /// Containing triangle, or -1 when the point lies outside the mesh.
    Index element = -1;
    Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();

    [[nodiscard]] bool inside() const noexcept { return element >= 0; }
};

/// Explicit Euler foot of the characteristic ending at x.
inline Vec2 trace_foot(const Vec2& x, const Vec2& relative_velocity, double dt) {
    return x - dt * relative_velocity;
}

inline Eigen::Vector3d barycentric(const TriMesh& mesh, Index t, const Vec2& p) {
    const auto& tri = mesh.triangle(t);
    const Vec2& a = mesh.vertex(tri[0]);
    const Vec2& b = mesh.vertex(tri[1]);
    const Vec2& c = mesh.vertex(tri[2]);
    const double area = signed_area(a, b, c);
    return {signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area};
}

/// Point location by walking from `hint` towards p, with an exhaustive scan
/// as fallback when the walk leaves the mesh or stalls.
inline FootLocation locate(const TriMesh& mesh, const Vec2& p, Index hint = 0) {
    FootLocation loc;
    loc.point = p;
    const auto ntri = static_cast<Index>(mesh.triangle_count());
    const auto& nbr = mesh.topology().neighbours;
    Index t = (hint >= 0 && hint < ntri) ? hint : 0;
    for (Index step = 0; step < ntri; ++step) {
        const Eigen::Vector3d w = barycentric(mesh, t, p);
        Eigen::Index worst = 0;
        if (w.minCoeff(&worst) >= -kBarycentricTolerance) {
            loc.element = t;
            loc.barycentric = w;
            return loc;
        }
        const Index next = nbr[static_cast<std::size_t>(t)][static_cast<std::size_t>(worst)];
        if (next < 0) break;
        t = next;
    }
    for (Index s = 0; s < ntri; ++s) {
        const Eigen::Vector3d w = barycentric(mesh, s, p);
        if (w.minCoeff() >= -kBarycentricTolerance) {
            loc.element = s;
            loc.barycentric = w;
            return loc;
        }
    }
    return loc;
}

/// Nearest point of the boundary polyline, expressed as a location on the
/// triangle owning the closest boundary segment.
inline FootLocation project_to_boundary(const TriMesh& mesh, const Vec2& p) {
    const auto loop = mesh.boundary_loop();
    const auto& owner = mesh.topology().boundary_segment_triangle;
    double best = std::numeric_limits<double>::infinity();
    FootLocation loc;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Index a = loop[i];
        const Index b = loop[(i + 1) % loop.size()];
        const Vec2& pa = mesh.vertex(a);
        const Vec2 ab = mesh.vertex(b) - pa;
        const double s = std::clamp((p - pa).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        const Vec2 q = pa + s * ab;
        const double d = (p - q).squaredNorm();
        if (d < best) {
            best = d;
            loc.point = q;
            loc.element = owner[i];
            const auto& tri = mesh.triangle(owner[i]);
            loc.barycentric.setZero();
            for (int j = 0; j < 3; ++j) {
                if (tri[j] == a) loc.barycentric(j) = 1.0 - s;
                if (tri[j] == b) loc.barycentric(j) = s;
            }
        }
    }
    return loc;
}

/// Feet of the characteristics through every node, located on the mesh.
/// Feet falling outside are projected onto the boundary polyline.
inline std::vector<FootLocation> compute_feet(const TriMesh& mesh, const VectorField& relative_velocity, double dt) {
    if (static_cast<std::size_t>(relative_velocity.rows()) != mesh.vertex_count())
        throw ContractViolation("relative velocity size does not match mesh");
    const auto& hints = mesh.topology().vertex_triangle;
    std::vector<FootLocation> feet(mesh.vertex_count());
    for (Index k = 0; k < static_cast<Index>(feet.size()); ++k) {
        const Vec2& x = mesh.vertex(k);
        const Vec2 foot = trace_foot(x, relative_velocity.row(k).transpose(), dt);
        if (foot == x) {
            feet[static_cast<std::size_t>(k)].point = x;  // stationary node, resolved exactly by pullback
            continue;
        }
        FootLocation loc = locate(mesh, foot, hints[static_cast<std::size_t>(k)]);
        feet[static_cast<std::size_t>(k)] = loc.inside() ? loc : project_to_boundary(mesh, foot);
    }
    return feet;
}

/// Interpolates `field` at each node's foot. A node whose foot is its own
/// position keeps its value exactly; an unlocated foot is projected onto the
/// boundary first.
template <typename Field>
Field pullback(const TriMesh& mesh, const Field& field, const std::vector<FootLocation>& feet) {
    if (static_cast<std::size_t>(field.rows()) != mesh.vertex_count() || feet.size() != mesh.vertex_count())
        throw ContractViolation("pullback inputs do not match mesh");
    Field out(field.rows(), field.cols());
    for (Index k = 0; k < static_cast<Index>(feet.size()); ++k) {
        const FootLocation& foot = feet[static_cast<std::size_t>(k)];
        if (foot.point == mesh.vertex(k)) {
            out.row(k) = field.row(k);
            continue;
        }
        const FootLocation loc = foot.inside() ? foot : project_to_boundary(mesh, foot.point);
        const auto& tri = mesh.triangle(loc.element);
        out.row(k) = loc.barycentric(0) * field.row(tri[0]) + loc.barycentric(1) * field.row(tri[1]) +
                     loc.barycentric(2) * field.row(tri[2]);
    }
    return out;
}

}  // namespace swale
