#pragma once

// Regularizing operator of the contact line, defined on the reference curve.
//
// The half-root operator is the periodic arclength second difference on the
// frozen boundary polyline; its Gram form H^T W H (W = nodal arclength
// weights) is the discrete squared H^2 seminorm that enters the momentum
// system through the boundary nodes.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "swale/errors.hpp"
#include "swale/fem.hpp"
#include "swale/mesh.hpp"

namespace swale {

inline constexpr double kMinSegmentLength = 1e-12;

struct BoundaryOperator {
    Index size = 0;
    /// Length of segment i, joining node i and node i+1.
    Eigen::VectorXd segment_lengths;
    /// Arclength quadrature weight of node i: half of its two segments.
    Eigen::VectorXd weights;
    SparseOperator halfroot;
    SparseOperator gram;
};

inline BoundaryOperator build_boundary_operator(std::span<const Vec2> gamma0) {
    const auto b = static_cast<Index>(gamma0.size());
    if (b < 4) throw ContractViolation("boundary operator needs at least 4 nodes");
    BoundaryOperator op;
    op.size = b;
    op.segment_lengths.resize(b);
    for (Index i = 0; i < b; ++i) {
        const double s = (gamma0[static_cast<std::size_t>((i + 1) % b)] - gamma0[static_cast<std::size_t>(i)]).norm();
        if (!(s >= kMinSegmentLength))
            throw ContractViolation("degenerate boundary segment " + std::to_string(i));
        op.segment_lengths(i) = s;
    }
    op.weights.resize(b);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(3 * static_cast<std::size_t>(b));
    for (Index i = 0; i < b; ++i) {
        const Index prev = (i + b - 1) % b;
        const Index next = (i + 1) % b;
        const double s_next = op.segment_lengths(i);
        const double s_prev = op.segment_lengths(prev);
        const double span = s_next + s_prev;
        op.weights(i) = 0.5 * span;
        const double c_prev = 2.0 / (s_prev * span);
        const double c_next = 2.0 / (s_next * span);
        trips.emplace_back(i, prev, c_prev);
        trips.emplace_back(i, i, -(c_prev + c_next));
        trips.emplace_back(i, next, c_next);
    }
    op.halfroot.resize(b, b);
    op.halfroot.setFromTriplets(trips.begin(), trips.end());
    const SparseOperator weighted = op.weights.asDiagonal() * op.halfroot;
    op.gram = SparseOperator(op.halfroot.transpose()) * weighted;
    op.gram.prune(0.0);
    return op;
}

inline BoundaryOperator build_boundary_operator(const TriMesh& mesh) {
    return build_boundary_operator(mesh.ref_boundary_coords());
}

/// Contributions of the time-discretized boundary pairing: lhs = s/dt * gram
/// on the boundary block, rhs = s/dt * gram * u_prev, with s the strength.
struct BoundarySystemTerms {
    SparseOperator lhs;
    VectorField rhs;
};

inline BoundarySystemTerms boundary_system_terms(const BoundaryOperator& op, const VectorField& u_boundary_prev,
                                                 double dt, double strength = 1.0) {
    if (!(dt > 0.0)) throw ContractViolation("boundary terms need dt > 0");
    if (!(strength >= 0.0)) throw ContractViolation("contact-line strength must be non-negative");
    if (u_boundary_prev.rows() != op.size) throw ContractViolation("boundary trace size mismatch");
    BoundarySystemTerms terms;
    terms.lhs = (strength / dt) * op.gram;
    terms.rhs = terms.lhs * u_boundary_prev;
    return terms;
}

}  // namespace swale
