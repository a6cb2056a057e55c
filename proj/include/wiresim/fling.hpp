#pragma once

#include <array>
#include <vector>

#include "wiresim/dynamics.hpp"

namespace wiresim {

struct ActionBounds {
    double max_dy = 0.6;
    double max_dz = 0.6;
    double max_pitch = M_PI / 2;

    double bound(int component) const {  // component 0..2 within a waypoint
        return component == 0 ? max_dy : component == 1 ? max_dz : max_pitch;
    }
};

// Three gripper pose offsets (dy, dz, pitch) relative to the start pose.
struct FlingAction {
    std::array<std::array<double, 3>, 3> offsets{};

    static FlingAction from_flat(const std::array<double, 9>& v);
    std::array<double, 9> flat() const;
    // Returns true if anything had to be clamped into bounds.
    bool clamp(const ActionBounds& b);
};

// Gripper pose within the fling plane: position offset from the scene's
// start point plus a tilt of the grasped edge about the x axis.
struct GripperPose {
    double y = 0;
    double z = 0;
    double pitch = 0;
};

struct FlingScene {
    SceneConfig scene;
    Vec3 anchor = Vec3(0, 0, 1.0);
    Vec3 gripper_start = Vec3(0, 0.25, 1.0);
    double wire_length = 2.0;
    int sections = 30;
    double wire_mass = 2.0;
    double wire_damping = 0.5;
    ActionBounds bounds;

    int control_steps = 75;
    double fling_duration = 1.5;  // seconds over the whole trajectory
    double dt = 0.002;
    double settle_time = 3.0;
    double settle_kinetic_tol = 2e-5;
    int init_relax_steps = 12000;
    double init_kinetic_tol = 1e-7;

    static FlingScene standard();
    void validate() const;

    // Derived geometry of the gap between the two obstacles.
    Vec3 gap_goal() const;       // midpoint of the two top-center points
    double gap_y_min() const;    // inner face of the near obstacle
    double gap_y_max() const;    // inner face of the far obstacle
    double gap_top() const;      // obstacle top height
    double far_outer_y() const;  // outer face of the far obstacle
};

struct TraceFrame {
    double time = 0;
    std::vector<Vec3> nodes;
};

struct EpisodeResult {
    double reward = 0;
    double min_d_err = 0;
    bool success = false;
    bool diverged = false;
    bool clamped = false;  // action had out-of-bounds components
    std::vector<TraceFrame> trace;
};

// Interpolating cubic spline through start + the three offset waypoints,
// sampled at n_steps uniform parameters (the first sample is the start).
std::vector<GripperPose> build_trajectory(const FlingAction& a,
                                          const GripperPose& start, int n_steps);

// Distance from the wire to the gap goal; exactly zero when a node is inside
// the gap volume.
double d_err(const RodState& s, const FlingScene& fs);

// r = 10 on success, else -min_d_err.
double reward(double min_d_err, bool success);

// The wire rests between the obstacles: its lowest free node is inside the
// gap volume and nothing flew past the far obstacle. Requires a settled
// state.
bool check_success(const RodState& s, const FlingScene& fs, double kinetic_energy);

// Build the hanging wire, drive the gripper through the action's trajectory,
// settle, and score.
EpisodeResult run_episode(const FlingAction& a, const FlingScene& fs,
                          double alpha, double beta, bool record_trace = false);

// The settled pre-fling state (exposed for tests and tooling).
RodState initial_state(const FlingScene& fs, const RodParams& p);

RodParams wire_params(const FlingScene& fs, double alpha, double beta);

}  // namespace wiresim
