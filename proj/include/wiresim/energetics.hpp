#pragma once

#include <vector>

#include "wiresim/geometry.hpp"
#include "wiresim/types.hpp"

namespace wiresim {

struct RodParams {
    double alpha = 1.0;   // bending modulus (energy * length)
    double beta = 1.0;    // twisting modulus (energy * length)
    double damping = 0.0; // translational velocity decay rate, 1/s
    std::vector<double> node_masses;

    void validate(int num_nodes) const;

    // Uniform wire of given total mass; end nodes carry half a segment each.
    static RodParams uniform(double alpha, double beta, double total_mass,
                             int num_edges, double damping = 0.0);
    // Closed loop: one node per edge, all equal.
    static RodParams uniform_closed(double alpha, double beta, double total_mass,
                                    int num_edges, double damping = 0.0);
};

// Material-frame angles relative to the Bishop frame, one per edge. The first
// and last entries act as clamped boundary values during the quasi-static
// solve. For closed rods, seam_twist is an imposed end-to-end twist inserted
// at the seam vertex.
struct MaterialFrame {
    std::vector<double> thetas;
    double seam_twist = 0.0;
};

// Twist at a vertex: theta difference across the two edges plus the
// accumulated reference twist (plus the seam offset on closed rods).
double vertex_twist(const Centerline& c, const FrameSet& f, const MaterialFrame& m,
                    int vertex);

double bending_energy(const Centerline& c, const FrameSet& f, const RodParams& p);
double twist_energy(const Centerline& c, const FrameSet& f, const MaterialFrame& m,
                    const RodParams& p);

// Minimize elastic energy over the interior thetas (tridiagonal solve).
// Boundary thetas stay clamped; on closed rods theta[0] is the gauge.
MaterialFrame solve_quasistatic_thetas(const Centerline& c, const FrameSet& f,
                                       const MaterialFrame& m, const RodParams& p);

// Stationarity residual of the theta system, max over free edges.
double quasistatic_residual(const Centerline& c, const FrameSet& f,
                            const MaterialFrame& m, const RodParams& p);

// -dE/dx per node for a theta-relaxed material frame, including the
// twist-holonomy terms through the reference frames.
std::vector<Vec3> centerline_forces(const Centerline& c, const FrameSet& f,
                                    const MaterialFrame& m, const RodParams& p);

// Total elastic energy after relaxing interior thetas.
double relaxed_energy(const Centerline& c, const FrameSet& f, const MaterialFrame& m,
                      const RodParams& p);

// Max relative deviation between analytic forces and central finite
// differences of the relaxed energy, step h.
double fd_gradient_check(const Centerline& c, const FrameSet& f,
                         const MaterialFrame& m, const RodParams& p, double h);

}  // namespace wiresim
