#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "wiresim/energetics.hpp"
#include "wiresim/geometry.hpp"
#include "wiresim/types.hpp"

namespace wiresim {

struct Box {
    Vec3 center = Vec3::Zero();
    Vec3 half_extents = Vec3::Zero();

    bool contains(const Vec3& p) const {
        const Vec3 d = (p - center).cwiseAbs() - half_extents;
        return d.maxCoeff() < 0;
    }
};

struct SceneConfig {
    Vec3 gravity = Vec3::Zero();
    std::optional<double> ground_height;
    std::vector<Box> obstacles;
    double contact_stiffness = 1e4;    // N/m
    double contact_damping = 10.0;     // N s/m along the contact normal
    double contact_friction = 1.0;     // N s/m viscous, tangential

    void validate() const;
};

struct NodeClamp {
    int node = -1;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
};

struct BoundaryCondition {
    std::vector<NodeClamp> clamps;
    double theta_start = 0.0;  // clamped material angle, first edge
    double theta_end = 0.0;    // clamped material angle, last edge
    bool clamp_thetas = true;  // closed rods keep their own gauge instead

    std::vector<bool> clamp_mask(int num_nodes) const;
};

enum class ProjectionMethod { gauss_seidel, newton };

struct SimOptions {
    double projection_tol = 1e-8;  // relative edge-length violation
    int projection_max_iters = 50;
    ProjectionMethod projection = ProjectionMethod::newton;
    bool implicit_elastic = true;  // Gauss-Newton filtered velocity update
    bool elastic_enabled = true;   // false: plain chain, no rod forces
    double velocity_limit = 1e4;   // m/s, divergence detector
};

struct RodState {
    Centerline centerline;
    std::vector<Vec3> velocities;
    FrameSet frames;
    MaterialFrame material;
    double time = 0.0;
    long step_count = 0;

    static RodState make(const Centerline& c, const Vec3& u0);
};

std::vector<Vec3> contact_forces(const RodState& s, const SceneConfig& scene);

RodState damp_velocities(const RodState& s, const RodParams& p, double dt);

// Restore every edge to its rest length by mass-weighted corrections.
// Clamped nodes never move. When dt > 0 the position corrections are fed
// back into the velocities. Throws ConstraintError when max_iters passes
// without reaching tol.
RodState project_inextensibility(const RodState& s, double tol = 1e-8,
                                 int max_iters = 50,
                                 const std::vector<bool>& clamped = {},
                                 double dt = 0.0,
                                 ProjectionMethod method = ProjectionMethod::newton,
                                 const std::vector<double>& masses = {});

// One time step: refresh frames, relax thetas, accumulate forces, advance
// velocities/positions, re-impose boundary conditions, project edge lengths.
RodState step(const RodState& s, const RodParams& p, const BoundaryCondition& bc,
              const SceneConfig& scene, double dt, const SimOptions& opt = {});

// Step with strong damping until the kinetic energy drops below kinetic_tol.
// Second member reports convergence.
std::pair<RodState, bool> relax(const RodState& s, const RodParams& p,
                                const BoundaryCondition& bc, const SceneConfig& scene,
                                int max_steps, double kinetic_tol, double dt = 0.002,
                                const SimOptions& opt = {});

double kinetic_energy(const RodState& s, const RodParams& p);
double gravitational_energy(const RodState& s, const RodParams& p,
                            const SceneConfig& scene);
double max_edge_violation(const RodState& s);

}  // namespace wiresim
