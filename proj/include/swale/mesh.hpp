#pragma once

// Deforming triangular mesh with persistent node identity.
//
// Connectivity (triangles, neighbours, boundary loop) is fixed at construction
// and shared between every moved copy of a mesh; only vertex coordinates
// change over a run. The boundary loop is ordered counterclockwise and its
// coordinates at construction time are frozen as the reference curve.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "swale/errors.hpp"

namespace swale {

using Vec2 = Eigen::Vector2d;
using Index = int;
using Triangle = std::array<Index, 3>;

/// Per-node 2-vectors, one row per vertex.
using VectorField = Eigen::Matrix<double, Eigen::Dynamic, 2>;
/// Per-node scalars.
using ScalarField = Eigen::VectorXd;

/// Triangles with area below this are degenerate.
inline constexpr double kDegenerateArea = 1e-14;

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Closed-segment intersection test, including collinear overlap.
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        const double v = cross(b - a, c - a);
        return (v > 0.0) - (v < 0.0);
    };
    const auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& p) {
        return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
               std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
    };
    const int o1 = orient(p1, p2, q1);
    const int o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1);
    const int o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

/// Immutable connectivity shared by all configurations of one mesh.
struct MeshTopology {
    std::vector<Triangle> triangles;
    /// neighbours[t][i]: triangle across the edge opposite local vertex i, or -1.
    std::vector<std::array<Index, 3>> neighbours;
    /// Counterclockwise boundary vertex loop; segment i joins loop[i] and loop[i+1].
    std::vector<Index> boundary_loop;
    /// Triangle owning boundary segment i.
    std::vector<Index> boundary_segment_triangle;
    /// Position of a vertex in boundary_loop, or -1 for interior vertices.
    std::vector<Index> boundary_position;
    /// One triangle incident to each vertex.
    std::vector<Index> vertex_triangle;
    std::size_t edge_count = 0;
};

class TriMesh {
public:
    /// Builds connectivity and extracts the boundary loop. The loop starts at
    /// the lowest-numbered boundary vertex.
    TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles)
        : vertices_(std::move(vertices)) {
        topo_ = std::make_shared<const MeshTopology>(build_topology(vertices_, std::move(triangles)));
        check_orientation();
        ref_boundary_.reserve(topo_->boundary_loop.size());
        for (Index v : topo_->boundary_loop) ref_boundary_.push_back(vertex(v));
    }

    [[nodiscard]] std::size_t vertex_count() const noexcept { return vertices_.size(); }
    [[nodiscard]] std::size_t triangle_count() const noexcept { return topo_->triangles.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return topo_->edge_count; }
    [[nodiscard]] std::size_t boundary_count() const noexcept { return topo_->boundary_loop.size(); }

    [[nodiscard]] std::span<const Vec2> vertices() const noexcept { return vertices_; }
    [[nodiscard]] const Vec2& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] std::span<const Triangle> triangles() const noexcept { return topo_->triangles; }
    [[nodiscard]] const Triangle& triangle(Index t) const { return topo_->triangles[static_cast<std::size_t>(t)]; }
    [[nodiscard]] std::span<const Index> boundary_loop() const noexcept { return topo_->boundary_loop; }
    [[nodiscard]] std::span<const Vec2> ref_boundary_coords() const noexcept { return ref_boundary_; }
    [[nodiscard]] const MeshTopology& topology() const noexcept { return *topo_; }

    [[nodiscard]] bool is_boundary(Index v) const { return topo_->boundary_position[static_cast<std::size_t>(v)] >= 0; }
    [[nodiscard]] Index boundary_position(Index v) const { return topo_->boundary_position[static_cast<std::size_t>(v)]; }

    [[nodiscard]] double area(Index t) const {
        const auto& tri = triangle(t);
        return signed_area(vertex(tri[0]), vertex(tri[1]), vertex(tri[2]));
    }

    /// Same connectivity and reference curve, new coordinates. Throws
    /// MeshTangled if any triangle loses positive orientation.
    [[nodiscard]] TriMesh with_vertices(std::vector<Vec2> vertices) const {
        if (vertices.size() != vertices_.size())
            throw ContractViolation("vertex count mismatch when moving mesh");
        TriMesh moved(*this);
        moved.vertices_ = std::move(vertices);
        moved.check_orientation();
        return moved;
    }

private:
    static MeshTopology build_topology(const std::vector<Vec2>& verts, std::vector<Triangle> tris) {
        const auto nv = static_cast<Index>(verts.size());
        if (tris.empty()) throw MeshConstructionError("mesh has no triangles");
        MeshTopology topo;
        topo.neighbours.assign(tris.size(), {-1, -1, -1});
        topo.vertex_triangle.assign(verts.size(), -1);
        topo.boundary_position.assign(verts.size(), -1);

        // edge (min,max) -> (triangle, local vertex opposite)
        std::map<std::pair<Index, Index>, std::pair<Index, int>> open_edges;
        for (std::size_t t = 0; t < tris.size(); ++t) {
            const auto& tri = tris[t];
            for (int i = 0; i < 3; ++i) {
                if (tri[i] < 0 || tri[i] >= nv) throw MeshConstructionError("triangle vertex index out of range");
                topo.vertex_triangle[static_cast<std::size_t>(tri[i])] = static_cast<Index>(t);
            }
            if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
                throw MeshConstructionError("triangle with repeated vertex");
            for (int i = 0; i < 3; ++i) {
                const Index a = tri[(i + 1) % 3];
                const Index b = tri[(i + 2) % 3];
                const std::pair<Index, Index> key{std::min(a, b), std::max(a, b)};
                auto it = open_edges.find(key);
                if (it == open_edges.end()) {
                    open_edges.emplace(key, std::pair{static_cast<Index>(t), i});
                    ++topo.edge_count;
                } else {
                    if (it->second.first < 0) throw MeshConstructionError("edge shared by more than two triangles");
                    const auto [other, j] = it->second;
                    topo.neighbours[t][static_cast<std::size_t>(i)] = other;
                    topo.neighbours[static_cast<std::size_t>(other)][static_cast<std::size_t>(j)] = static_cast<Index>(t);
                    it->second.first = -1;
                }
            }
        }
        for (Index v = 0; v < nv; ++v)
            if (topo.vertex_triangle[static_cast<std::size_t>(v)] < 0)
                throw MeshConstructionError("vertex " + std::to_string(v) + " belongs to no triangle");

        // Boundary edges keep the orientation of their owning triangle, which
        // runs counterclockwise around the domain.
        std::map<Index, std::pair<Index, Index>> next;  // a -> (b, triangle)
        for (std::size_t t = 0; t < tris.size(); ++t) {
            for (int i = 0; i < 3; ++i) {
                if (topo.neighbours[t][static_cast<std::size_t>(i)] >= 0) continue;
                const Index a = tris[t][(i + 1) % 3];
                const Index b = tris[t][(i + 2) % 3];
                if (!next.emplace(a, std::pair{b, static_cast<Index>(t)}).second)
                    throw MeshConstructionError("boundary is not a simple closed loop");
            }
        }
        if (next.size() < 3) throw MeshConstructionError("boundary has fewer than three segments");
        Index current = next.begin()->first;
        const Index start = current;
        do {
            const auto it = next.find(current);
            if (it == next.end()) throw MeshConstructionError("boundary loop is open");
            topo.boundary_position[static_cast<std::size_t>(current)] = static_cast<Index>(topo.boundary_loop.size());
            topo.boundary_loop.push_back(current);
            topo.boundary_segment_triangle.push_back(it->second.second);
            current = it->second.first;
            if (topo.boundary_loop.size() > next.size()) throw MeshConstructionError("boundary loop is not simple");
        } while (current != start);
        if (topo.boundary_loop.size() != next.size())
            throw MeshConstructionError("boundary has several components; domain must be simply connected");

        topo.triangles = std::move(tris);
        return topo;
    }

    void check_orientation() const {
        for (std::size_t t = 0; t < topo_->triangles.size(); ++t) {
            const double a = area(static_cast<Index>(t));
            if (!(a > kDegenerateArea)) throw MeshTangled(t, a);
        }
    }

    std::vector<Vec2> vertices_;
    std::shared_ptr<const MeshTopology> topo_;
    std::vector<Vec2> ref_boundary_;
};

struct MeshQualityReport {
    double min_signed_area = 0.0;
    double min_angle = 0.0;
    double min_edge_length = 0.0;
};

inline MeshQualityReport quality(const TriMesh& mesh) {
    MeshQualityReport q{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangle(static_cast<Index>(t));
        q.min_signed_area = std::min(q.min_signed_area, mesh.area(static_cast<Index>(t)));
        for (int i = 0; i < 3; ++i) {
            const Vec2& p = mesh.vertex(tri[i]);
            const Vec2 e1 = mesh.vertex(tri[(i + 1) % 3]) - p;
            const Vec2 e2 = mesh.vertex(tri[(i + 2) % 3]) - p;
            q.min_edge_length = std::min(q.min_edge_length, e1.norm());
            q.min_angle = std::min(q.min_angle, std::atan2(std::abs(cross(e1, e2)), e1.dot(e2)));
        }
    }
    return q;
}

inline double total_area(const TriMesh& mesh) {
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) sum += mesh.area(static_cast<Index>(t));
    return sum;
}

/// Each node's third of the area of its incident triangles.
inline ScalarField lumped_areas(const TriMesh& mesh) {
    ScalarField m = ScalarField::Zero(static_cast<Eigen::Index>(mesh.vertex_count()));
    for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
        const double third = mesh.area(t) / 3.0;
        for (Index v : mesh.triangle(t)) m(v) += third;
    }
    return m;
}

/// Shoelace area of the boundary polygon.
inline double boundary_polygon_area(const TriMesh& mesh) {
    const auto loop = mesh.boundary_loop();
    double sum = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i)
        sum += cross(mesh.vertex(loop[i]), mesh.vertex(loop[(i + 1) % loop.size()]));
    return 0.5 * sum;
}

/// Moves every node by dt * velocity. Connectivity and the reference curve
/// are shared with the input.
inline TriMesh move_nodes(const TriMesh& mesh, const VectorField& velocity, double dt) {
    if (static_cast<std::size_t>(velocity.rows()) != mesh.vertex_count())
        throw ContractViolation("velocity field size does not match mesh");
    if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
    std::vector<Vec2> moved(mesh.vertices().begin(), mesh.vertices().end());
    for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += dt * velocity.row(static_cast<Index>(k)).transpose();
    return mesh.with_vertices(std::move(moved));
}

/// First pair of non-adjacent boundary segments that touch, if any.
inline std::optional<std::pair<std::size_t, std::size_t>> find_boundary_self_intersection(const TriMesh& mesh) {
    const auto loop = mesh.boundary_loop();
    const std::size_t n = loop.size();
    const auto seg = [&](std::size_t i) { return std::pair{mesh.vertex(loop[i]), mesh.vertex(loop[(i + 1) % n])}; };
    std::vector<Eigen::AlignedBox2d> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [a, b] = seg(i);
        boxes[i].extend(a);
        boxes[i].extend(b);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // share loop[0]
            if (!boxes[i].intersects(boxes[j])) continue;
            const auto [p1, p2] = seg(i);
            const auto [q1, q2] = seg(j);
            if (segments_intersect(p1, p2, q1, q2)) return std::pair{i, j};
        }
    }
    return std::nullopt;
}

/// Structured disk mesh: a centre node plus `rings` concentric rings, ring k
/// holding `per_ring * k` equally spaced nodes, zipped together ring by ring.
/// Produces per_ring * rings^2 triangles.
inline TriMesh build_disk_mesh_rings(double radius, int per_ring, int rings) {
    if (!(radius > 0.0)) throw ContractViolation("radius must be positive");
    if (per_ring < 3 || rings < 1) throw MeshConstructionError("disk needs at least 3 nodes per ring and one ring");
    constexpr double two_pi = 2.0 * std::numbers::pi;

    std::vector<Vec2> verts{Vec2::Zero()};
    std::vector<Index> ring_start{0};
    std::vector<double> ring_offset{0.0};
    for (int k = 1; k <= rings; ++k) {
        const int n = per_ring * k;
        // Outer ring starts at angle 0; inner rings are staggered by half a step.
        const double offset = (k == rings) ? 0.0 : ((rings - k) % 2 == 1 ? 0.5 * two_pi / n : 0.0);
        ring_start.push_back(static_cast<Index>(verts.size()));
        ring_offset.push_back(offset);
        const double r = (k == rings) ? radius : radius * k / rings;
        for (int j = 0; j < n; ++j) {
            const double th = offset + two_pi * j / n;
            verts.emplace_back(r * std::cos(th), r * std::sin(th));
        }
    }
    // The outer ring is appended first in index order so that the boundary loop
    // begins at the node on the positive x axis.
    const Index outer_first = ring_start.back();
    const Index outer_n = per_ring * rings;
    std::vector<Index> perm(verts.size());
    for (Index v = 0; v < static_cast<Index>(verts.size()); ++v)
        perm[static_cast<std::size_t>(v)] = v >= outer_first ? v - outer_first : v + outer_n;

    std::vector<Triangle> tris;
    const auto add = [&](Index a, Index b, Index c) {
        if (signed_area(verts[a], verts[b], verts[c]) < 0.0) std::swap(b, c);
        tris.push_back({a, b, c});
    };
    for (int j = 0; j < per_ring; ++j) add(0, ring_start[1] + j, ring_start[1] + (j + 1) % per_ring);
    for (int k = 2; k <= rings; ++k) {
        const int nin = per_ring * (k - 1);
        const int nout = per_ring * k;
        const double off_in = ring_offset[static_cast<std::size_t>(k - 1)];
        const double off_out = ring_offset[static_cast<std::size_t>(k)];
        const auto in = [&](int i) { return ring_start[static_cast<std::size_t>(k - 1)] + i % nin; };
        const auto out = [&](int j) { return ring_start[static_cast<std::size_t>(k)] + j % nout; };
        int i = 0;
        int j = 0;
        while (i < nin || j < nout) {
            const double next_in = off_in + two_pi * (i + 1) / nin;
            const double next_out = off_out + two_pi * (j + 1) / nout;
            if (j < nout && (i == nin || next_out <= next_in)) {
                add(in(i), out(j), out(j + 1));
                ++j;
            } else {
                add(in(i), out(j), in(i + 1));
                ++i;
            }
        }
    }

    std::vector<Vec2> ordered(verts.size());
    for (std::size_t v = 0; v < verts.size(); ++v) ordered[static_cast<std::size_t>(perm[v])] = verts[v];
    for (auto& tri : tris)
        for (auto& v : tri) v = perm[static_cast<std::size_t>(v)];
    return TriMesh(std::move(ordered), std::move(tris));
}

/// Disk of the given radius centred at the origin with approximately
/// `target_triangle_count` triangles (within 20%).
inline TriMesh build_disk_mesh(double radius, int target_triangle_count) {
    if (!(radius > 0.0)) throw ContractViolation("radius must be positive");
    if (target_triangle_count < 16)
        throw MeshConstructionError("target triangle count " + std::to_string(target_triangle_count) +
                                    " is too small for a closed disk boundary (minimum 16)");
    int best_n = 0;
    int best_m = 0;
    double best_err = std::numeric_limits<double>::infinity();
    // Ring densities near six per ring keep triangles close to equilateral, so
    // each unit of distance from six costs 2% of the target.
    for (int n : {6, 5, 7, 4, 8}) {
        const int m = std::max(1, static_cast<int>(std::lround(std::sqrt(double(target_triangle_count) / n))));
        for (int mm : {m - 1, m, m + 1}) {
            if (mm < 1) continue;
            const double err = std::abs(double(n) * mm * mm - target_triangle_count) +
                               0.02 * target_triangle_count * std::abs(n - 6);
            if (err < best_err) {
                best_err = err;
                best_n = n;
                best_m = mm;
            }
        }
    }
    if (std::abs(double(best_n) * best_m * best_m - target_triangle_count) > 0.2 * target_triangle_count)
        throw MeshConstructionError("no ring layout within 20% of the requested triangle count");
    return build_disk_mesh_rings(radius, best_n, best_m);
}

}  // namespace swale
