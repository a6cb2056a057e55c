#include "wiresim/dynamics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "wiresim/detail/banded.hpp"

namespace wiresim {

void SceneConfig::validate() const {
    if (!(contact_stiffness > 0)) throw ConfigError("contact stiffness must be positive");
    for (size_t i = 0; i < obstacles.size(); ++i)
        for (size_t j = i + 1; j < obstacles.size(); ++j) {
            const Vec3 d = (obstacles[i].center - obstacles[j].center).cwiseAbs();
            const Vec3 span = obstacles[i].half_extents + obstacles[j].half_extents;
            if ((d - span).maxCoeff() < 0)
                throw ConfigError("obstacle boxes overlap");
        }
}

std::vector<bool> BoundaryCondition::clamp_mask(int num_nodes) const {
    std::vector<bool> mask(num_nodes, false);
    for (const auto& c : clamps) {
        if (c.node < 0 || c.node >= num_nodes)
            throw ConfigError("clamp node out of range");
        mask[c.node] = true;
    }
    return mask;
}

RodState RodState::make(const Centerline& c, const Vec3& u0) {
    c.validate();
    RodState s;
    s.centerline = c;
    s.velocities.assign(c.num_nodes(), Vec3::Zero());
    s.frames = init_reference_frames(c, u0);
    s.material.thetas.assign(c.num_edges(), 0.0);
    return s;
}

namespace {

void accumulate_contact(Vec3& force, const Vec3& normal, double penetration,
                        const Vec3& velocity, const SceneConfig& scene) {
    const double vn = velocity.dot(normal);
    double fn = scene.contact_stiffness * penetration - scene.contact_damping * vn;
    if (fn < 0) fn = 0;
    const Vec3 vt = velocity - vn * normal;
    force += fn * normal - scene.contact_friction * vt;
}

}  // namespace

std::vector<Vec3> contact_forces(const RodState& s, const SceneConfig& scene) {
    const int nn = s.centerline.num_nodes();
    std::vector<Vec3> forces(nn, Vec3::Zero());
    for (int i = 0; i < nn; ++i) {
        const Vec3& x = s.centerline.nodes[i];
        const Vec3& v = s.velocities[i];
        if (scene.ground_height) {
            const double pen = *scene.ground_height - x.z();
            if (pen > 0)
                accumulate_contact(forces[i], Vec3::UnitZ(), pen, v, scene);
        }
        for (const Box& box : scene.obstacles) {
            const Vec3 d = x - box.center;
            const Vec3 pen3 = box.half_extents - d.cwiseAbs();
            if (pen3.minCoeff() <= 0) continue;
            int axis;
            pen3.minCoeff(&axis);
            Vec3 normal = Vec3::Zero();
            normal[axis] = d[axis] >= 0 ? 1.0 : -1.0;
            accumulate_contact(forces[i], normal, pen3[axis], v, scene);
        }
    }
    return forces;
}

RodState damp_velocities(const RodState& s, const RodParams& p, double dt) {
    RodState out = s;
    const double factor = std::exp(-p.damping * dt);
    for (Vec3& v : out.velocities) v *= factor;
    return out;
}

double max_edge_violation(const RodState& s) {
    double worst = 0;
    for (int i = 0; i < s.centerline.num_edges(); ++i) {
        const double rest = s.centerline.rest_lengths[i];
        worst = std::max(worst, std::abs(s.centerline.edge(i).norm() - rest) / rest);
    }
    return worst;
}

namespace {

std::vector<double> inverse_masses(const std::vector<double>& masses,
                                   const std::vector<bool>& clamped, int nn) {
    std::vector<double> w(nn, 1.0);
    if (!masses.empty())
        for (int i = 0; i < nn; ++i) w[i] = 1.0 / masses[i];
    for (int i = 0; i < nn; ++i)
        if (!clamped.empty() && clamped[i]) w[i] = 0.0;
    return w;
}

void gs_sweep(Centerline& c, const std::vector<double>& w, int begin, int end, int dir) {
    const int nn = c.num_nodes();
    for (int i = begin; i != end; i += dir) {
        const int a = i;
        const int b = (i + 1) % nn;
        const Vec3 d = c.nodes[b] - c.nodes[a];
        const double len = d.norm();
        if (len < 1e-15) continue;
        const double wsum = w[a] + w[b];
        if (wsum == 0) continue;
        const Vec3 corr = (len - c.rest_lengths[i]) / (wsum * len) * d;
        c.nodes[a] += w[a] * corr;
        c.nodes[b] -= w[b] * corr;
    }
}

// Newton step on C_i = |e_i| - rest_i with weights w: solve (J W J^T) dl = -C.
// Open chains only; the system is tridiagonal.
void newton_project_iteration(Centerline& c, const std::vector<double>& w,
                               double damping_factor) {
    const int ne = c.num_edges();
    const int nn = c.num_nodes();
    std::vector<Vec3> dir(ne);
    std::vector<double> diag(ne), sub(ne, 0), rhs(ne);
    for (int i = 0; i < ne; ++i) {
        const Vec3 e = c.nodes[(i + 1) % nn] - c.nodes[i];
        const double len = e.norm();
        dir[i] = e / len;
        diag[i] = w[i] + w[(i + 1) % nn];
        rhs[i] = -(len - c.rest_lengths[i]);
    }
    for (int i = 1; i < ne; ++i) sub[i] = -w[i] * dir[i - 1].dot(dir[i]);
    // Rows whose both nodes are clamped cannot move; pin lambda to zero.
    for (int i = 0; i < ne; ++i)
        if (diag[i] == 0) {
            diag[i] = 1;
            rhs[i] = 0;
            sub[i] = 0;
            if (i + 1 < ne) sub[i + 1] = 0;
        }
    // Thomas on the symmetric tridiagonal system.
    std::vector<double> diag2 = diag;
    for (int i = 1; i < ne; ++i) {
        const double m = sub[i] / diag2[i - 1];
        diag2[i] -= m * sub[i];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> lambda(ne);
    lambda[ne - 1] = rhs[ne - 1] / diag2[ne - 1];
    for (int i = ne - 2; i >= 0; --i)
        lambda[i] = (rhs[i] - sub[i + 1] * lambda[i + 1]) / diag2[i];

    std::vector<Vec3> delta(nn, Vec3::Zero());
    for (int i = 0; i < ne; ++i) {
        const Vec3 impulse = lambda[i] * dir[i];
        delta[i] -= w[i] * impulse;
        delta[(i + 1) % nn] += w[(i + 1) % nn] * impulse;
    }
    // Near-collinear compressed chains make the system ill-conditioned; cap
    // the step so a wild lambda cannot fling nodes across the rod.
    double dmax = 0, lmin = c.rest_lengths[0];
    for (const Vec3& d : delta) dmax = std::max(dmax, d.norm());
    for (double l : c.rest_lengths) lmin = std::min(lmin, l);
    const double cap = 0.25 * lmin;
    double scale = dmax > cap ? cap / dmax : 1.0;
    scale *= damping_factor;
    for (int i = 0; i < nn; ++i) c.nodes[i] += scale * delta[i];
}

}  // namespace

RodState project_inextensibility(const RodState& s, double tol, int max_iters,
                                 const std::vector<bool>& clamped, double dt,
                                 ProjectionMethod method,
                                 const std::vector<double>& masses) {
    if (!(tol > 0)) throw ConfigError("projection tolerance must be positive");
    RodState out = s;
    Centerline& c = out.centerline;
    const int nn = c.num_nodes();
    const std::vector<double> w = inverse_masses(masses, clamped, nn);

    const bool use_newton = method == ProjectionMethod::newton && !c.closed;
    double prev_worst = std::numeric_limits<double>::infinity();
    double damping_factor = 1.0;
    for (int iter = 0;; ++iter) {
        const double worst = max_edge_violation(out);
        if (worst <= tol) break;
        if (iter >= max_iters)
            throw ConstraintError("inextensibility projection did not converge", worst);
        if (use_newton) {
            // Halve the step whenever the residual failed to shrink; rough
            // non-smooth violation fields otherwise make Newton oscillate.
            damping_factor = worst < prev_worst ? 1.0 : 0.5 * damping_factor;
            newton_project_iteration(c, w, damping_factor);
        } else {
            gs_sweep(c, w, 0, c.num_edges(), 1);
            gs_sweep(c, w, c.num_edges() - 1, -1, -1);
        }
        prev_worst = worst;
    }

    if (dt > 0) {
        for (int i = 0; i < nn; ++i)
            if (clamped.empty() || !clamped[i])
                out.velocities[i] += (c.nodes[i] - s.centerline.nodes[i]) / dt;
    }
    return out;
}

namespace {

// Gauss-Newton stiffness of the elastic energy, assembled into a banded
// matrix over the 3*nn velocity dofs. PSD by construction, which is all the
// implicit filter needs.
void assemble_elastic_stiffness(const Centerline& c, const FrameSet&,
                                const RodParams& p, double dt2,
                                detail::BandedSpd& A) {
    const int nn = c.num_nodes();
    const int v0 = c.first_vertex();
    for (int v = v0; v < v0 + c.num_vertices(); ++v) {
        const int ep = c.prev_edge_of_vertex(v);
        const int en = c.next_edge_of_vertex(v);
        const Vec3 e_prev = c.edge(ep);
        const Vec3 e_next = c.edge(en);
        const double lp = e_prev.norm(), ln = e_next.norm();
        const double denom = lp * ln + e_prev.dot(e_next);
        if (denom < 1e-12 * lp * ln)
            throw KinkError("stiffness assembly: fold at vertex " + std::to_string(v));
        const Vec3 kb = 2.0 * e_prev.cross(e_next) / denom;

        Eigen::Matrix3d cross_prev, cross_next;
        cross_prev << 0, -e_prev.z(), e_prev.y(), e_prev.z(), 0, -e_prev.x(),
            -e_prev.y(), e_prev.x(), 0;
        cross_next << 0, -e_next.z(), e_next.y(), e_next.z(), 0, -e_next.x(),
            -e_next.y(), e_next.x(), 0;
        const Vec3 wp = (ln / lp) * e_prev + e_next;
        const Vec3 wn = (lp / ln) * e_next + e_prev;
        const Eigen::Matrix3d Mp = (-2.0 * cross_next - kb * wp.transpose()) / denom;
        const Eigen::Matrix3d Mn = (2.0 * cross_prev - kb * wn.transpose()) / denom;

        const double inv_vor = 1.0 / c.voronoi_length(v);
        const int nodes[3] = {(v - 1 + nn) % nn, v % nn, (v + 1) % nn};
        Eigen::Matrix3d J[3] = {-Mp, Mp - Mn, Mn};
        const Vec3 g[3] = {-kb / (2.0 * lp), kb / (2.0 * lp) - kb / (2.0 * ln),
                           kb / (2.0 * ln)};

        const double cb = dt2 * p.alpha * inv_vor;
        const double ct = dt2 * p.beta * inv_vor;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                if (nodes[a] < nodes[b]) continue;  // lower triangle only
                const Eigen::Matrix3d blk =
                    cb * (J[a].transpose() * J[b]) + ct * (g[a] * g[b].transpose());
                for (int r = 0; r < 3; ++r)
                    for (int s2 = 0; s2 < 3; ++s2) {
                        const int gi = 3 * nodes[a] + r;
                        const int gj = 3 * nodes[b] + s2;
                        if (gi >= gj)
                            A.add(gi, gj, blk(r, s2));
                        else if (nodes[a] == nodes[b])
                            continue;  // upper half of a diagonal block
                    }
            }
    }
}

void check_finite(const RodState& s, double velocity_limit) {
    for (int i = 0; i < s.centerline.num_nodes(); ++i) {
        const Vec3& x = s.centerline.nodes[i];
        const Vec3& v = s.velocities[i];
        if (!x.allFinite() || !v.allFinite() || v.norm() > velocity_limit)
            throw DivergedError("simulation diverged at step " +
                                    std::to_string(s.step_count) + ", node " +
                                    std::to_string(i),
                                s.step_count);
    }
}

}  // namespace

RodState step(const RodState& s, const RodParams& p, const BoundaryCondition& bc,
              const SceneConfig& scene, double dt, const SimOptions& opt) {
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    const int nn = s.centerline.num_nodes();
    const int ne = s.centerline.num_edges();
    p.validate(nn);

    RodState out = s;
    const std::vector<bool> clamped = bc.clamp_mask(nn);

    std::vector<Vec3> force(nn, Vec3::Zero());
    if (opt.elastic_enabled) {
        out.frames = time_parallel_update(s.frames, out.centerline);
        if (bc.clamp_thetas && !out.centerline.closed) {
            out.material.thetas[0] = bc.theta_start;
            out.material.thetas[ne - 1] = bc.theta_end;
        }
        out.material = solve_quasistatic_thetas(out.centerline, out.frames,
                                                out.material, p);
        force = centerline_forces(out.centerline, out.frames, out.material, p);
    }
    const std::vector<Vec3> fc = contact_forces(out, scene);
    for (int i = 0; i < nn; ++i)
        force[i] += fc[i] + p.node_masses[i] * scene.gravity;

    // Velocity update. The elastic part is filtered through a Gauss-Newton
    // linearization so stiff bending modes stay stable at dt = 0.002.
    const bool implicit =
        opt.implicit_elastic && opt.elastic_enabled && !out.centerline.closed;
    if (implicit) {
        detail::BandedSpd A(3 * nn, 8);
        std::vector<double> rhs(3 * nn);
        for (int i = 0; i < nn; ++i)
            for (int k = 0; k < 3; ++k) {
                A.at(3 * i + k, 3 * i + k) = p.node_masses[i];
                rhs[3 * i + k] =
                    p.node_masses[i] * out.velocities[i][k] + dt * force[i][k];
            }
        assemble_elastic_stiffness(out.centerline, out.frames, p, dt * dt, A);
        for (const auto& cl : bc.clamps)
            for (int k = 0; k < 3; ++k)
                A.constrain_dof(3 * cl.node + k, cl.velocity[k], rhs);
        try {
            A.factor();
        } catch (const std::runtime_error&) {
            // Overflowing stiffness entries (near-kinked edges) surface here.
            throw DivergedError("implicit velocity solve failed at step " +
                                    std::to_string(s.step_count),
                                s.step_count);
        }
        A.solve(rhs);
        for (int i = 0; i < nn; ++i)
            out.velocities[i] = Vec3(rhs[3 * i], rhs[3 * i + 1], rhs[3 * i + 2]);
    } else {
        for (int i = 0; i < nn; ++i)
            out.velocities[i] += dt / p.node_masses[i] * force[i];
        for (const auto& cl : bc.clamps) out.velocities[cl.node] = cl.velocity;
    }

    check_finite(out, opt.velocity_limit);

    const double decay = std::exp(-p.damping * dt);
    for (int i = 0; i < nn; ++i)
        if (!clamped[i]) out.velocities[i] *= decay;

    for (int i = 0; i < nn; ++i) out.centerline.nodes[i] += dt * out.velocities[i];

    // Prescribed nodes land exactly on their targets before projection so the
    // post-step inextensibility guarantee also holds at moving boundaries.
    for (const auto& cl : bc.clamps) {
        out.centerline.nodes[cl.node] = cl.position;
        out.velocities[cl.node] = cl.velocity;
    }

    out = project_inextensibility(out, opt.projection_tol, opt.projection_max_iters,
                                  clamped, dt, opt.projection, p.node_masses);

    check_finite(out, opt.velocity_limit);
    out.time += dt;
    out.step_count += 1;
    return out;
}

std::pair<RodState, bool> relax(const RodState& s, const RodParams& p,
                                const BoundaryCondition& bc, const SceneConfig& scene,
                                int max_steps, double kinetic_tol, double dt,
                                const SimOptions& opt) {
    if (!(kinetic_tol > 0)) throw ConfigError("kinetic tolerance must be positive");
    RodParams strong = p;
    strong.damping = std::max(p.damping, 20.0);
    RodState cur = s;
    // Always probe with at least one step: a rod at rest under net force is
    // not settled even though its kinetic energy is zero.
    for (int i = 0; i < std::max(max_steps, 1); ++i) {
        cur = step(cur, strong, bc, scene, dt, opt);
        if (kinetic_energy(cur, p) < kinetic_tol) return {cur, true};
    }
    return {cur, false};
}

double kinetic_energy(const RodState& s, const RodParams& p) {
    double e = 0;
    for (int i = 0; i < s.centerline.num_nodes(); ++i)
        e += 0.5 * p.node_masses[i] * s.velocities[i].squaredNorm();
    return e;
}

double gravitational_energy(const RodState& s, const RodParams& p,
                            const SceneConfig& scene) {
    double e = 0;
    for (int i = 0; i < s.centerline.num_nodes(); ++i)
        e -= p.node_masses[i] * scene.gravity.dot(s.centerline.nodes[i]);
    return e;
}

}  // namespace wiresim
