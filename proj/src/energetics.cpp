#include "wiresim/energetics.hpp"

#include <cmath>

namespace wiresim {

void RodParams::validate(int num_nodes) const {
    if (!(alpha > 0) || !(beta > 0))
        throw ConfigError("moduli must be positive");
    if (damping < 0) throw ConfigError("damping must be non-negative");
    if (static_cast<int>(node_masses.size()) != num_nodes)
        throw ConfigError("node_masses size mismatch");
    for (double mass : node_masses)
        if (!(mass > 0)) throw ConfigError("node masses must be positive");
}

RodParams RodParams::uniform(double alpha, double beta, double total_mass,
                             int num_edges, double damping) {
    RodParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.damping = damping;
    const int nn = num_edges + 1;
    p.node_masses.assign(nn, total_mass / num_edges);
    p.node_masses.front() *= 0.5;
    p.node_masses.back() *= 0.5;
    return p;
}

RodParams RodParams::uniform_closed(double alpha, double beta, double total_mass,
                                    int num_edges, double damping) {
    RodParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.damping = damping;
    p.node_masses.assign(num_edges, total_mass / num_edges);
    return p;
}

double vertex_twist(const Centerline& c, const FrameSet& f, const MaterialFrame& m,
                    int vertex) {
    const int ep = c.prev_edge_of_vertex(vertex);
    const int en = c.next_edge_of_vertex(vertex);
    double tw = m.thetas[en] - m.thetas[ep] +
                f.reference_twists[vertex - c.first_vertex()];
    if (c.closed && vertex == 0) tw += m.seam_twist;
    return tw;
}

double bending_energy(const Centerline& c, const FrameSet&, const RodParams& p) {
    double e = 0;
    const int v0 = c.first_vertex();
    for (int v = v0; v < v0 + c.num_vertices(); ++v) {
        const Vec3 kb = curvature_binormal(c.edge(c.prev_edge_of_vertex(v)),
                                           c.edge(c.next_edge_of_vertex(v)));
        e += p.alpha * kb.squaredNorm() / (2.0 * c.voronoi_length(v));
    }
    return e;
}

double twist_energy(const Centerline& c, const FrameSet& f, const MaterialFrame& m,
                    const RodParams& p) {
    double e = 0;
    const int v0 = c.first_vertex();
    for (int v = v0; v < v0 + c.num_vertices(); ++v) {
        const double tw = vertex_twist(c, f, m, v);
        e += p.beta * tw * tw / (2.0 * c.voronoi_length(v));
    }
    return e;
}

MaterialFrame solve_quasistatic_thetas(const Centerline& c, const FrameSet& f,
                                       const MaterialFrame& m, const RodParams& p) {
    if (!(p.beta > 0)) throw ConfigError("theta system singular: beta must be positive");
    const int ne = c.num_edges();
    if (static_cast<int>(m.thetas.size()) != ne)
        throw ConfigError("thetas size mismatch");

    MaterialFrame out = m;
    // Free edges: 1..ne-2 open (both boundary thetas clamped), 1..ne-1 closed
    // (theta[0] is the gauge).
    const int nfree = c.closed ? ne - 1 : ne - 2;
    if (nfree <= 0) return out;

    std::vector<double> sub(nfree, 0), diag(nfree, 0), sup(nfree, 0), rhs(nfree, 0);

    auto vor = [&](int v) { return c.voronoi_length(v); };
    auto tau = [&](int v) {
        double t = f.reference_twists[v - c.first_vertex()];
        if (c.closed && v == 0) t += m.seam_twist;
        return t;
    };

    for (int k = 0; k < nfree; ++k) {
        const int j = k + 1;  // edge index
        // Vertex j sits between edges j-1 and j; vertex after edge j is j+1
        // (wrapping to the seam vertex 0 on closed rods).
        const int vnext = c.closed ? (j + 1) % ne : j + 1;
        const double la = vor(j), lb = vor(vnext);
        diag[k] = 1.0 / la + 1.0 / lb;
        sub[k] = -1.0 / la;
        sup[k] = -1.0 / lb;
        rhs[k] = -tau(j) / la + tau(vnext) / lb;
        if (j - 1 == 0) rhs[k] += m.thetas[0] / la;
        if (c.closed && vnext == 0)
            rhs[k] += m.thetas[0] / lb;  // theta of edge 0 closes the loop
        else if (!c.closed && j + 1 == ne - 1)
            rhs[k] += m.thetas[ne - 1] / lb;
    }

    // Thomas algorithm.
    for (int k = 1; k < nfree; ++k) {
        const double w = sub[k] / diag[k - 1];
        diag[k] -= w * sup[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    std::vector<double> sol(nfree);
    sol[nfree - 1] = rhs[nfree - 1] / diag[nfree - 1];
    for (int k = nfree - 2; k >= 0; --k)
        sol[k] = (rhs[k] - sup[k] * sol[k + 1]) / diag[k];
    for (int k = 0; k < nfree; ++k) out.thetas[k + 1] = sol[k];
    return out;
}

double quasistatic_residual(const Centerline& c, const FrameSet& f,
                            const MaterialFrame& m, const RodParams& p) {
    const int ne = c.num_edges();
    const int jmax = c.closed ? ne - 1 : ne - 2;
    double worst = 0;
    for (int j = 1; j <= jmax; ++j) {
        const int vnext = c.closed ? (j + 1) % ne : j + 1;
        const double r = p.beta * (vertex_twist(c, f, m, j) / c.voronoi_length(j) -
                                   vertex_twist(c, f, m, vnext) / c.voronoi_length(vnext));
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

std::vector<Vec3> centerline_forces(const Centerline& c, const FrameSet& f,
                                    const MaterialFrame& m, const RodParams& p) {
    const int nn = c.num_nodes();
    std::vector<Vec3> force(nn, Vec3::Zero());
    const int v0 = c.first_vertex();
    for (int v = v0; v < v0 + c.num_vertices(); ++v) {
        const int ep = c.prev_edge_of_vertex(v);
        const int en = c.next_edge_of_vertex(v);
        const Vec3 e_prev = c.edge(ep);
        const Vec3 e_next = c.edge(en);
        const double lp = e_prev.norm(), ln = e_next.norm();
        const double denom = lp * ln + e_prev.dot(e_next);
        if (denom < 1e-12 * lp * ln)
            throw KinkError("centerline_forces: fold at vertex " + std::to_string(v));
        const Vec3 kb = 2.0 * e_prev.cross(e_next) / denom;

        const double inv_vor = 1.0 / c.voronoi_length(v);
        const double kb2 = kb.squaredNorm();

        // d|kb|^2/2 with respect to each edge vector.
        const Vec3 g_prev =
            (2.0 * e_next.cross(kb) - kb2 * (ln / lp * e_prev + e_next)) / denom;
        const Vec3 g_next =
            (2.0 * kb.cross(e_prev) - kb2 * (lp / ln * e_next + e_prev)) / denom;

        const double cb = p.alpha * inv_vor;
        // Twist moment per unit length at this vertex (uniform once relaxed).
        const double w = p.beta * vertex_twist(c, f, m, v) * inv_vor;
        const Vec3 h_prev = kb / (2.0 * lp);  // d(reference twist)/d(e_prev)
        const Vec3 h_next = kb / (2.0 * ln);

        const int a = (v - 1 + nn) % nn;
        const int b = v % nn;
        const int d = (v + 1) % nn;
        force[a] += cb * g_prev + w * h_prev;
        force[b] += cb * (g_next - g_prev) + w * (h_next - h_prev);
        force[d] += -cb * g_next - w * h_next;
    }
    return force;
}

double relaxed_energy(const Centerline& c, const FrameSet& f, const MaterialFrame& m,
                      const RodParams& p) {
    const MaterialFrame relaxed = solve_quasistatic_thetas(c, f, m, p);
    return bending_energy(c, f, p) + twist_energy(c, f, relaxed, p);
}

double fd_gradient_check(const Centerline& c, const FrameSet& f,
                         const MaterialFrame& m, const RodParams& p, double h) {
    if (!(h > 0)) throw ConfigError("fd step must be positive");
    const MaterialFrame relaxed = solve_quasistatic_thetas(c, f, m, p);
    const std::vector<Vec3> analytic = centerline_forces(c, f, relaxed, p);

    double worst = 0;
    for (int i = 0; i < c.num_nodes(); ++i) {
        for (int k = 0; k < 3; ++k) {
            Centerline probe = c;
            probe.nodes[i][k] += h;
            const double ep = relaxed_energy(probe, time_parallel_update(f, probe), m, p);
            probe.nodes[i][k] -= 2.0 * h;
            const double em = relaxed_energy(probe, time_parallel_update(f, probe), m, p);
            const double f_fd = -(ep - em) / (2.0 * h);
            const double err = std::abs(analytic[i][k] - f_fd) / (std::abs(f_fd) + 1e-9);
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace wiresim
