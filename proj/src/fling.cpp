#include "wiresim/fling.hpp"

#include <algorithm>
#include <cmath>

namespace wiresim {

FlingAction FlingAction::from_flat(const std::array<double, 9>& v) {
    FlingAction a;
    for (int w = 0; w < 3; ++w)
        for (int c = 0; c < 3; ++c) a.offsets[w][c] = v[3 * w + c];
    return a;
}

std::array<double, 9> FlingAction::flat() const {
    std::array<double, 9> v{};
    for (int w = 0; w < 3; ++w)
        for (int c = 0; c < 3; ++c) v[3 * w + c] = offsets[w][c];
    return v;
}

bool FlingAction::clamp(const ActionBounds& b) {
    bool touched = false;
    for (auto& wp : offsets)
        for (int c = 0; c < 3; ++c) {
            const double lim = b.bound(c);
            if (wp[c] > lim || wp[c] < -lim) {
                wp[c] = std::clamp(wp[c], -lim, lim);
                touched = true;
            }
        }
    return touched;
}

FlingScene FlingScene::standard() {
    FlingScene fs;
    fs.scene.gravity = Vec3(0, 0, -9.81);
    fs.scene.ground_height = 0.0;
    // Near obstacle inner face at y = 0.65, far inner face at 0.95 (0.3 m
    // gap); reachable for a 2 m wire anchored at y = 0 with the gripper box
    // limited to y <= 0.85.
    fs.scene.obstacles = {
        Box{Vec3(0, 0.60, 0.15), Vec3(0.2, 0.05, 0.15)},
        Box{Vec3(0, 1.00, 0.15), Vec3(0.2, 0.05, 0.15)},
    };
    fs.anchor = Vec3(0, 0, 0.6);
    fs.gripper_start = Vec3(0, 0.25, 0.6);
    return fs;
}

void FlingScene::validate() const {
    scene.validate();
    if (scene.obstacles.size() != 2)
        throw ConfigError("fling scene needs exactly two obstacles");
    if (sections < 3) throw ConfigError("wire needs at least 3 sections");
    if (!(wire_length > 0) || !(wire_mass > 0))
        throw ConfigError("wire length and mass must be positive");
    if (control_steps < 4) throw ConfigError("need at least 4 control steps");
    if (!scene.ground_height) throw ConfigError("fling scene needs a ground plane");
}

Vec3 FlingScene::gap_goal() const {
    const Box& a = scene.obstacles[0];
    const Box& b = scene.obstacles[1];
    const Vec3 top_a = a.center + Vec3(0, 0, a.half_extents.z());
    const Vec3 top_b = b.center + Vec3(0, 0, b.half_extents.z());
    return 0.5 * (top_a + top_b);
}

double FlingScene::gap_y_min() const {
    const Box& a = scene.obstacles[0];
    return a.center.y() + a.half_extents.y();
}

double FlingScene::gap_y_max() const {
    const Box& b = scene.obstacles[1];
    return b.center.y() - b.half_extents.y();
}

double FlingScene::gap_top() const {
    const Box& a = scene.obstacles[0];
    return a.center.z() + a.half_extents.z();
}

double FlingScene::far_outer_y() const {
    const Box& b = scene.obstacles[1];
    return b.center.y() + b.half_extents.y();
}

std::vector<GripperPose> build_trajectory(const FlingAction& a,
                                          const GripperPose& start, int n_steps) {
    if (n_steps < 4) throw ConfigError("trajectory needs at least 4 samples");

    // Natural cubic spline through 4 knots at uniform parameters.
    auto spline_channel = [](const std::array<double, 4>& y) {
        // Second derivatives from the natural spline tridiagonal system
        // (uniform spacing 1): M0 = M3 = 0.
        const double r1 = 6 * (y[2] - 2 * y[1] + y[0]);
        const double r2 = 6 * (y[3] - 2 * y[2] + y[1]);
        const double m1 = (4 * r1 - r2) / 15.0;
        const double m2 = (4 * r2 - r1) / 15.0;
        return std::array<double, 4>{0.0, m1, m2, 0.0};
    };

    std::array<std::array<double, 4>, 3> knots;
    const std::array<double, 3> s0 = {start.y, start.z, start.pitch};
    for (int c = 0; c < 3; ++c) {
        knots[c][0] = s0[c];
        for (int w = 0; w < 3; ++w) knots[c][w + 1] = s0[c] + a.offsets[w][c];
    }
    std::array<std::array<double, 4>, 3> m2nd;
    for (int c = 0; c < 3; ++c) m2nd[c] = spline_channel(knots[c]);

    auto eval = [&](int c, double t) {  // t in [0, 3]
        const int i = std::min(2, static_cast<int>(t));
        const double u = t - i;
        const auto& y = knots[c];
        const auto& m = m2nd[c];
        return y[i] * (1 - u) + y[i + 1] * u +
               ((1 - u) * ((1 - u) * (1 - u) - 1) * m[i] + u * (u * u - 1) * m[i + 1]) /
                   6.0;
    };

    std::vector<GripperPose> poses(n_steps);
    for (int k = 0; k < n_steps; ++k) {
        const double t = 3.0 * k / (n_steps - 1);
        poses[k] = {eval(0, t), eval(1, t), eval(2, t)};
    }
    return poses;
}

namespace {

// Penalty contact lets resting nodes sink a hair below the ground plane, so
// "above ground" carries a small grace margin.
constexpr double kGroundGrace = 0.005;

bool in_gap_volume(const Vec3& p, const FlingScene& fs) {
    return p.y() > fs.gap_y_min() && p.y() < fs.gap_y_max() &&
           p.z() < fs.gap_top() && p.z() > *fs.scene.ground_height - kGroundGrace;
}

}  // namespace

double d_err(const RodState& s, const FlingScene& fs) {
    const Vec3 goal = fs.gap_goal();
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& x : s.centerline.nodes) {
        if (in_gap_volume(x, fs)) return 0.0;
        best = std::min(best, (x - goal).norm());
    }
    return best;
}

double reward(double min_d_err, bool success) {
    // Success pays +10 flat; failures score the (negated) closest approach.
    return success ? 10.0 : -min_d_err;
}

bool check_success(const RodState& s, const FlingScene& fs, double ke) {
    if (ke > fs.settle_kinetic_tol)
        throw NotSettledError("success checked before the wire settled");
    const int n = s.centerline.num_nodes();
    // Free span: everything but the anchored node and the grasped edge.
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = 1; i < n - 2; ++i)
        lowest = std::min(lowest, s.centerline.nodes[i].z());
    // Nodes resting on the ground tie in z up to contact penetration; any of
    // the joint-lowest nodes inside the gap counts.
    bool lowest_in_gap = false;
    for (int i = 1; i < n - 2; ++i) {
        const Vec3& x = s.centerline.nodes[i];
        if (x.z() <= lowest + kGroundGrace && in_gap_volume(x, fs))
            lowest_in_gap = true;
    }
    if (!lowest_in_gap) return false;
    for (const Vec3& x : s.centerline.nodes)
        if (x.y() > fs.far_outer_y()) return false;
    return true;
}

RodParams wire_params(const FlingScene& fs, double alpha, double beta) {
    return RodParams::uniform(alpha, beta, fs.wire_mass, fs.sections,
                              fs.wire_damping);
}

namespace {

// Start shape: a hairpin close to the hanging equilibrium — straight legs
// down from both held points joined by a semicircular U-turn. Sharp corners
// here make the first settling steps violent at unlucky stiffness values.
Centerline drape_centerline(const FlingScene& fs) {
    const int n = fs.sections;
    const double h = fs.wire_length / n;
    const double span = (fs.gripper_start - fs.anchor).norm();
    const double radius = 0.5 * span;
    const double leg = 0.5 * (fs.wire_length - M_PI * radius);
    if (leg <= 0) throw ConfigError("wire too short for the hairpin drape");
    const Vec3 across = (fs.gripper_start - fs.anchor).normalized();

    std::vector<Vec3> waypoints = {fs.anchor, fs.anchor + Vec3(0, 0, -leg)};
    const Vec3 pivot = fs.anchor + Vec3(0, 0, -leg) + radius * across;
    for (int k = 1; k < 48; ++k) {
        const double a = M_PI * k / 48;
        waypoints.push_back(pivot - radius * std::cos(a) * across -
                            radius * std::sin(a) * Vec3(0, 0, 1));
    }
    waypoints.push_back(fs.gripper_start + Vec3(0, 0, -leg));
    waypoints.push_back(fs.gripper_start);
    // Walk that polyline, dropping nodes every h of arc.
    Centerline c;
    c.nodes.push_back(waypoints[0]);
    double carry = 0;
    size_t seg = 0;
    Vec3 pos = waypoints[0];
    while (static_cast<int>(c.nodes.size()) < n + 1 && seg + 1 < waypoints.size()) {
        const Vec3 to = waypoints[seg + 1];
        const double avail = (to - pos).norm();
        const double need = h - carry;
        if (avail >= need) {
            pos += (to - pos).normalized() * need;
            c.nodes.push_back(pos);
            carry = 0;
        } else {
            carry += avail;
            pos = to;
            ++seg;
        }
    }
    // Rounding can leave the walk one node short of the gripper.
    if (static_cast<int>(c.nodes.size()) == n) c.nodes.push_back(waypoints.back());
    if (static_cast<int>(c.nodes.size()) != n + 1)
        throw SimError("fling: drape construction lost nodes");
    c.rest_lengths.assign(n, h);
    return c;
}

BoundaryCondition make_bc(const FlingScene& fs, const GripperPose& pose,
                          const GripperPose& vel, int n, double h) {
    const Vec3 grip = fs.gripper_start + Vec3(0, pose.y, pose.z);
    const Vec3 dir(0, -std::sin(pose.pitch), std::cos(pose.pitch));
    const Vec3 ddir_dpitch(0, -std::cos(pose.pitch), -std::sin(pose.pitch));
    const Vec3 grip_v(0, vel.y, vel.z);

    BoundaryCondition bc;
    bc.clamps.push_back({0, fs.anchor, Vec3::Zero()});
    bc.clamps.push_back({n, grip, grip_v});
    bc.clamps.push_back({n - 1, grip - h * dir, grip_v - h * vel.pitch * ddir_dpitch});
    return bc;
}

}  // namespace

RodState initial_state(const FlingScene& fs, const RodParams& p) {
    fs.validate();
    const int n = fs.sections;
    const double h = fs.wire_length / n;
    Centerline c = drape_centerline(fs);
    const Vec3 t0 = c.tangent(0);
    Vec3 u0 = Vec3(1, 0, 0) - Vec3(1, 0, 0).dot(t0) * t0;
    RodState s = RodState::make(c, u0.normalized());
    s = project_inextensibility(s, 1e-9, 400, {}, 0.0, ProjectionMethod::newton,
                                p.node_masses);

    const BoundaryCondition bc = make_bc(fs, GripperPose{}, GripperPose{}, n, h);
    SimOptions opt;
    auto [settled, ok] = relax(s, p, bc, fs.scene, fs.init_relax_steps,
                               fs.init_kinetic_tol, fs.dt, opt);
    if (!ok)
        throw SimError("fling: initial drape did not settle");
    settled.time = 0;
    settled.step_count = 0;
    return settled;
}

EpisodeResult run_episode(const FlingAction& action_in, const FlingScene& fs,
                          double alpha, double beta, bool record_trace) {
    fs.validate();
    const int n = fs.sections;
    const double h = fs.wire_length / n;
    const RodParams p = wire_params(fs, alpha, beta);

    FlingAction action = action_in;
    EpisodeResult out;
    out.clamped = action.clamp(fs.bounds);

    // Start distance from the static drape geometry; well-defined even if
    // the settling itself fails.
    RodState s;
    {
        Centerline c0 = drape_centerline(fs);
        RodState probe;
        probe.centerline = c0;
        probe.velocities.assign(c0.num_nodes(), Vec3::Zero());
        out.min_d_err = d_err(probe, fs);
    }
    const double d0 = out.min_d_err;

    const auto setpoints = build_trajectory(action, GripperPose{}, fs.control_steps);
    const int substeps = std::max(
        1, static_cast<int>(std::lround(fs.fling_duration /
                                        ((fs.control_steps - 1) * fs.dt))));
    SimOptions opt;

    auto record = [&](const RodState& st) {
        if (record_trace) out.trace.push_back({st.time, st.centerline.nodes});
    };

    try {
        s = initial_state(fs, p);
        out.min_d_err = std::min(out.min_d_err, d_err(s, fs));
        record(s);
        for (int k = 1; k < fs.control_steps; ++k) {
            const GripperPose& from = setpoints[k - 1];
            const GripperPose& to = setpoints[k];
            const double seg_dt = substeps * fs.dt;
            const GripperPose vel = {(to.y - from.y) / seg_dt, (to.z - from.z) / seg_dt,
                                     (to.pitch - from.pitch) / seg_dt};
            for (int j = 1; j <= substeps; ++j) {
                const double f = static_cast<double>(j) / substeps;
                const GripperPose pose = {from.y + f * (to.y - from.y),
                                          from.z + f * (to.z - from.z),
                                          from.pitch + f * (to.pitch - from.pitch)};
                s = step(s, p, make_bc(fs, pose, vel, n, h), fs.scene, fs.dt, opt);
                out.min_d_err = std::min(out.min_d_err, d_err(s, fs));
            }
            record(s);
        }

        // Hold the final pose and let the wire come to rest.
        const GripperPose final_pose = setpoints.back();
        const BoundaryCondition bc_hold = make_bc(fs, final_pose, GripperPose{}, n, h);
        const int settle_steps = static_cast<int>(fs.settle_time / fs.dt);
        RodParams p_settle = p;
        p_settle.damping = std::max(p.damping, 2.0);
        bool settled = false;
        for (int k = 0; k < settle_steps; ++k) {
            s = step(s, p_settle, bc_hold, fs.scene, fs.dt, opt);
            out.min_d_err = std::min(out.min_d_err, d_err(s, fs));
            if (k % 25 == 0) record(s);
            if (kinetic_energy(s, p) < 0.5 * fs.settle_kinetic_tol) {
                settled = true;
                break;
            }
        }
        record(s);
        out.success = settled && check_success(s, fs, kinetic_energy(s, p));
        out.reward = reward(out.min_d_err, out.success);
    } catch (const SimError&) {
        // Diverged or constraint-failed episodes score the distance between
        // the resting wire and the goal at the start.
        out.diverged = true;
        out.success = false;
        out.min_d_err = d0;
        out.reward = -d0;
    }
    return out;
}

}  // namespace wiresim
