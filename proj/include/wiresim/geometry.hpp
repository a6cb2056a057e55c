#pragma once

#include <vector>

#include "wiresim/types.hpp"

namespace wiresim {

// Discrete centerline: nodes x_0..x_N and one rest length per edge.
// An open chain has num_nodes()-1 edges; a closed loop wraps the last
// edge from the final node back to node 0.
struct Centerline {
    std::vector<Vec3> nodes;
    std::vector<double> rest_lengths;
    bool closed = false;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_edges() const { return closed ? num_nodes() : num_nodes() - 1; }
    // Interior vertices carry bending/twist stencils. Open: 1..N-1, closed: all.
    int num_vertices() const { return closed ? num_nodes() : num_nodes() - 2; }
    int first_vertex() const { return closed ? 0 : 1; }

    Vec3 edge(int i) const {
        return nodes[(i + 1) % num_nodes()] - nodes[i];
    }
    Vec3 tangent(int i) const { return edge(i).normalized(); }

    int prev_edge_of_vertex(int v) const {
        return closed ? (v + num_edges() - 1) % num_edges() : v - 1;
    }
    int next_edge_of_vertex(int v) const { return v; }

    // Voronoi length at a vertex, from rest lengths.
    double voronoi_length(int v) const {
        return 0.5 * (rest_lengths[prev_edge_of_vertex(v)] +
                      rest_lengths[next_edge_of_vertex(v)]);
    }
    double total_rest_length() const {
        double s = 0;
        for (double l : rest_lengths) s += l;
        return s;
    }

    void validate() const;

    static Centerline straight(const Vec3& start, const Vec3& dir, double length,
                               int num_edges);
    static Centerline ring(double radius, int num_edges);
};

// Per-edge tangents and twist-free (Bishop) directors, plus the accumulated
// reference twist at each interior vertex. Twists are tracked incrementally
// so full turns beyond +/-pi are counted.
struct FrameSet {
    std::vector<Vec3> tangents;
    std::vector<Vec3> reference_dirs;
    std::vector<double> reference_twists;  // one per interior vertex

    int num_edges() const { return static_cast<int>(tangents.size()); }
};

// Minimal rotation taking t_from onto t_to, applied to v. Throws
// DegenerateTransportError when the tangents are antiparallel.
Vec3 parallel_transport(const Vec3& t_from, const Vec3& t_to, const Vec3& v);

// kb = 2 e_prev x e_next / (|e_prev||e_next| + e_prev . e_next).
// |kb| = 2 tan(psi/2) for turning angle psi. Throws KinkError on a fold.
Vec3 curvature_binormal(const Vec3& e_prev, const Vec3& e_next);

// Build Bishop frames by space-parallel transport of u0 along the centerline.
// u0 must be orthogonal to the first tangent within 1e-8 (re-orthogonalized).
// Reference twists start at zero for open rods; a closed loop keeps its seam
// holonomy at vertex 0.
FrameSet init_reference_frames(const Centerline& c, const Vec3& u0);

// Carry each director from its previous tangent onto the new one and
// accumulate the change in reference twist at every interior vertex.
FrameSet time_parallel_update(const FrameSet& frames_prev, const Centerline& c_new);

}  // namespace wiresim
