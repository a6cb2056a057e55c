#include "wiresim/geometry.hpp"

#include <cmath>

namespace wiresim {

void Centerline::validate() const {
    if (num_nodes() < 3)
        throw ConfigError("centerline needs at least 3 nodes");
    if (static_cast<int>(rest_lengths.size()) != num_edges())
        throw ConfigError("rest_lengths size does not match edge count");
    for (double l : rest_lengths)
        if (!(l > 0)) throw ConfigError("rest lengths must be positive");
    for (int i = 0; i < num_edges(); ++i)
        if (edge(i).norm() < 1e-12)
            throw ConfigError("degenerate edge " + std::to_string(i));
}

Centerline Centerline::straight(const Vec3& start, const Vec3& dir, double length,
                                int num_edges) {
    Centerline c;
    const Vec3 t = dir.normalized();
    const double h = length / num_edges;
    c.nodes.reserve(num_edges + 1);
    for (int i = 0; i <= num_edges; ++i) c.nodes.push_back(start + (i * h) * t);
    c.rest_lengths.assign(num_edges, h);
    return c;
}

Centerline Centerline::ring(double radius, int num_edges) {
    Centerline c;
    c.closed = true;
    c.nodes.reserve(num_edges);
    for (int i = 0; i < num_edges; ++i) {
        const double a = 2.0 * M_PI * i / num_edges;
        c.nodes.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
    }
    // Rest length equals the chord so the circular shape is the rest state
    // of the constraints (though not of bending, which wants it straight).
    const double chord = 2.0 * radius * std::sin(M_PI / num_edges);
    c.rest_lengths.assign(num_edges, chord);
    return c;
}

Vec3 parallel_transport(const Vec3& t_from, const Vec3& t_to, const Vec3& v) {
    const Vec3 b = t_from.cross(t_to);
    const double c = t_from.dot(t_to);
    if (1.0 + c < 1e-9)
        throw DegenerateTransportError("parallel transport between antiparallel tangents");
    // Rodrigues form R = I + [b]x + [b]x^2/(1+c), exact and stable near identity.
    return v + b.cross(v) + b.cross(b.cross(v)) / (1.0 + c);
}

Vec3 curvature_binormal(const Vec3& e_prev, const Vec3& e_next) {
    const double denom = e_prev.norm() * e_next.norm() + e_prev.dot(e_next);
    if (denom < 1e-12 * e_prev.norm() * e_next.norm())
        throw KinkError("curvature binormal undefined: edges fold back");
    return 2.0 * e_prev.cross(e_next) / denom;
}

namespace {

Vec3 orthonormalized(const Vec3& u, const Vec3& t) {
    return (u - u.dot(t) * t).normalized();
}

}  // namespace

FrameSet init_reference_frames(const Centerline& c, const Vec3& u0) {
    const int ne = c.num_edges();
    FrameSet f;
    f.tangents.resize(ne);
    f.reference_dirs.resize(ne);
    for (int i = 0; i < ne; ++i) f.tangents[i] = c.tangent(i);

    if (std::abs(u0.normalized().dot(f.tangents[0])) > 1e-8)
        throw ConfigError("u0 must be orthogonal to the first tangent");
    f.reference_dirs[0] = orthonormalized(u0, f.tangents[0]);
    for (int i = 1; i < ne; ++i) {
        Vec3 u = parallel_transport(f.tangents[i - 1], f.tangents[i],
                                    f.reference_dirs[i - 1]);
        f.reference_dirs[i] = orthonormalized(u, f.tangents[i]);
    }

    f.reference_twists.assign(c.num_vertices(), 0.0);
    if (c.closed) {
        // Seam holonomy: directors were transported once around the loop, so
        // only vertex 0 (between the last and first edge) can carry twist.
        const Vec3 ut = orthonormalized(
            parallel_transport(f.tangents[ne - 1], f.tangents[0],
                               f.reference_dirs[ne - 1]),
            f.tangents[0]);
        f.reference_twists[0] = signed_angle(ut, f.reference_dirs[0], f.tangents[0]);
    }
    return f;
}

FrameSet time_parallel_update(const FrameSet& frames_prev, const Centerline& c_new) {
    const int ne = c_new.num_edges();
    if (frames_prev.num_edges() != ne)
        throw ConfigError("frame set does not match centerline");

    FrameSet f;
    f.tangents.resize(ne);
    f.reference_dirs.resize(ne);
    for (int i = 0; i < ne; ++i) {
        f.tangents[i] = c_new.tangent(i);
        Vec3 u = parallel_transport(frames_prev.tangents[i], f.tangents[i],
                                    frames_prev.reference_dirs[i]);
        f.reference_dirs[i] = orthonormalized(u, f.tangents[i]);
    }

    // Accumulate the twist increment instead of recomputing the wrapped angle,
    // so turn counting survives past +/-pi.
    const int nv = c_new.num_vertices();
    const int v0 = c_new.first_vertex();
    f.reference_twists.resize(nv);
    for (int k = 0; k < nv; ++k) {
        const int ep = c_new.prev_edge_of_vertex(v0 + k);
        const int en = c_new.next_edge_of_vertex(v0 + k);
        Vec3 ut = orthonormalized(
            parallel_transport(f.tangents[ep], f.tangents[en], f.reference_dirs[ep]),
            f.tangents[en]);
        const double old_twist = frames_prev.reference_twists[k];
        // Rotate the transported director by the stored twist, then measure the
        // small correction left over.
        const Vec3 axis = f.tangents[en];
        const double ca = std::cos(old_twist), sa = std::sin(old_twist);
        const Vec3 ut_rot = ca * ut + sa * axis.cross(ut);
        f.reference_twists[k] =
            old_twist + signed_angle(ut_rot, f.reference_dirs[en], axis);
    }
    return f;
}

}  // namespace wiresim
