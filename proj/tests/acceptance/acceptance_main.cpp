// Acceptance suite: one pass/fail line per criterion, exit code counts the
// failures. Run a subset by listing criterion numbers as arguments.

#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <random>
#include <set>
#include <string>

#include "wiresim/bench.hpp"
#include "wiresim/energetics.hpp"
#include "wiresim/policy.hpp"
#include "wiresim/validation.hpp"

using namespace wiresim;

namespace {

bool g_verbose = true;

void detail(const char* fmt, ...) {
    if (!g_verbose) return;
    va_list args;
    va_start(args, fmt);
    std::printf("    ");
    std::vprintf(fmt, args);
    std::printf("\n");
    va_end(args);
}

Vec3 random_unit(std::mt19937& rng) {
    std::normal_distribution<double> n(0, 1);
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Centerline random_bent_rod(std::mt19937& rng, int edges) {
    std::uniform_real_distribution<double> len(0.08, 0.12);
    Centerline c;
    c.nodes.push_back(Vec3::Zero());
    Vec3 dir = random_unit(rng);
    for (int i = 0; i < edges; ++i) {
        dir = (dir + 0.35 * random_unit(rng)).normalized();
        c.nodes.push_back(c.nodes.back() + len(rng) * dir);
    }
    for (int i = 0; i < edges; ++i) c.rest_lengths.push_back(c.edge(i).norm());
    return c;
}

// 1. Analytic forces match central differences of the relaxed energy.
bool criterion_gradient() {
    std::mt19937 rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Centerline c = random_bent_rod(rng, 9);  // 10 nodes
        const Vec3 t0 = c.tangent(0);
        Vec3 u0 = random_unit(rng);
        u0 = (u0 - u0.dot(t0) * t0).normalized();
        const FrameSet f = init_reference_frames(c, u0);
        const RodParams p = RodParams::uniform(1.345, 0.789, 0.5, 9);
        MaterialFrame m;
        m.thetas.assign(9, 0.0);
        m.thetas.back() = 2.0 + 0.1 * trial;  // bent and twisted
        worst = std::max(worst,
                         fd_gradient_check(c, f, m, p, 1e-6 * c.total_rest_length()));
    }
    detail("max relative gradient error over 20 rods: %.3e (tolerance 1e-4)", worst);
    return worst < 1e-4;
}

// 2. Helical buckling envelope convergence.
bool criterion_buckling() {
    BucklingConfig cfg;
    cfg.n_values = {40, 80, 140};
    const auto results = run_helical_buckling(cfg);
    for (const auto& r : results)
        detail("n=%3d  avg_error=%.6f  phi0=%.4f", r.n, r.avg_error, r.phi0);
    const bool decreasing = results[1].avg_error < results[0].avg_error &&
                            results[2].avg_error < results[1].avg_error;
    const bool absolute = results[2].avg_error <= 0.004;
    detail("strictly decreasing over {40, 80, 140}: %s", decreasing ? "yes" : "NO");
    detail("avg_error(140) <= 0.004: %s (measured %.6f)", absolute ? "yes" : "NO",
           results[2].avg_error);
    return decreasing && absolute;
}

// 3. Michell critical twist within 5% of 2*pi*sqrt(3)/(beta/alpha).
bool criterion_michell() {
    MichellConfig cfg;
    const auto results = run_michell(cfg);
    bool pass = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        detail("beta/alpha=%.2f  measured=%.4f  analytic=%.4f  deviation=%.2f%%",
               r.beta_over_alpha, r.theta_c_measured, r.theta_c_analytic,
               r.deviation_pct);
        pass = pass && r.deviation_pct <= 5.0;
        pass = pass && r.theta_c_measured < prev;  // decreases with beta/alpha
        prev = r.theta_c_measured;
    }
    return pass;
}

// 4. Invariant suite.
bool criterion_invariants() {
    bool pass = true;

    // Inextensibility and frame orthonormality through 1000 dynamic steps.
    {
        const int n = 30;
        RodState s = RodState::make(
            Centerline::straight(Vec3(0, 0, 1), Vec3(0, 1, 0), 2.0, n), Vec3(1, 0, 0));
        const RodParams p = RodParams::uniform(1.0, 1.0, 2.0, n, 0.5);
        SceneConfig scene;
        scene.gravity = Vec3(0, 0, -9.81);
        BoundaryCondition bc;
        bc.clamps.push_back({0, s.centerline.nodes[0], Vec3::Zero()});
        double worst_edge = 0, worst_frame = 0;
        for (int k = 0; k < 1000; ++k) {
            s = step(s, p, bc, scene, 0.002);
            worst_edge = std::max(worst_edge, max_edge_violation(s));
        }
        for (int i = 0; i < s.frames.num_edges(); ++i) {
            worst_frame = std::max(worst_frame,
                                   std::abs(s.frames.tangents[i].dot(s.frames.reference_dirs[i])));
            worst_frame = std::max(worst_frame,
                                   std::abs(s.frames.reference_dirs[i].norm() - 1.0));
        }
        detail("max edge violation over 1000 steps: %.2e (<= 1e-8)", worst_edge);
        detail("max frame orthonormality defect: %.2e (<= 1e-10)", worst_frame);
        pass = pass && worst_edge <= 1e-8 && worst_frame <= 1e-10;
    }

    // Net internal force and torque vanish on untwisted bent rods.
    {
        std::mt19937 rng(5150);
        double worst = 0;
        for (int trial = 0; trial < 5; ++trial) {
            const Centerline c = random_bent_rod(rng, 11);
            const Vec3 t0 = c.tangent(0);
            Vec3 u0 = random_unit(rng);
            u0 = (u0 - u0.dot(t0) * t0).normalized();
            const FrameSet f = init_reference_frames(c, u0);
            const RodParams p = RodParams::uniform(1.345, 0.789, 0.5, 11);
            MaterialFrame m;
            m.thetas.assign(11, 0.0);
            const auto forces =
                centerline_forces(c, f, solve_quasistatic_thetas(c, f, m, p), p);
            Vec3 net = Vec3::Zero(), torque = Vec3::Zero();
            double fmax = 0;
            for (int i = 0; i < c.num_nodes(); ++i) {
                net += forces[i];
                torque += c.nodes[i].cross(forces[i]);
                fmax = std::max(fmax, forces[i].norm());
            }
            const double scale = 1e-9 * fmax * c.total_rest_length();
            worst = std::max({worst, net.norm() / scale, torque.norm() / scale});
        }
        detail("net force/torque vs 1e-9*|F|max*L bound: worst ratio %.3f (< 1)", worst);
        pass = pass && worst < 1.0;
    }

    // Damped, undriven, contact-free motion never gains mechanical energy.
    {
        const int n = 16;
        RodState s = RodState::make(
            Centerline::straight(Vec3::Zero(), Vec3(1, 0, 0), 2.0, n), Vec3(0, 0, 1));
        for (int i = 0; i <= n; ++i)
            s.centerline.nodes[i].y() += 0.01 * std::sin(M_PI * i / n);
        s = project_inextensibility(s, 1e-10, 200);
        const RodParams p = RodParams::uniform(1.0, 1.0, 1.0, n, 0.8);
        SceneConfig scene;
        auto energy = [&](const RodState& st) {
            return relaxed_energy(st.centerline, st.frames, st.material, p) +
                   kinetic_energy(st, p);
        };
        double prev = energy(s);
        const double e0 = prev;
        bool monotone = true;
        for (int k = 0; k < 500; ++k) {
            s = step(s, p, BoundaryCondition{}, scene, 0.002);
            if (k % 50 == 49) {
                const double e = energy(s);
                monotone = monotone && e <= prev * (1 + 1e-9);
                prev = e;
            }
        }
        detail("mechanical energy: start %.6e end %.6e, non-increasing: %s", e0, prev,
               monotone ? "yes" : "NO");
        pass = pass && monotone && prev <= e0;
    }

    // Full determinism: identical seeds, bit-identical results.
    {
        auto run = [] {
            const int n = 18;
            RodState s = RodState::make(
                Centerline::straight(Vec3(0, 0, 1), Vec3(0, 1, 0), 2.0, n),
                Vec3(1, 0, 0));
            const RodParams p = RodParams::uniform(1.2, 0.9, 1.5, n, 0.3);
            SceneConfig scene;
            scene.gravity = Vec3(0, 0, -9.81);
            scene.ground_height = 0.0;
            BoundaryCondition bc;
            bc.clamps.push_back({0, s.centerline.nodes[0], Vec3::Zero()});
            for (int k = 0; k < 300; ++k) s = step(s, p, bc, scene, 0.002);
            return s;
        };
        const RodState a = run(), b = run();
        bool identical = true;
        for (int i = 0; i < a.centerline.num_nodes(); ++i)
            identical = identical && a.centerline.nodes[i] == b.centerline.nodes[i] &&
                        a.velocities[i] == b.velocities[i];

        const FlingScene fs = FlingScene::standard();
        FlingAction act{};
        act.offsets[1] = {0.4, 0.2, -0.8};
        const EpisodeResult e1 = run_episode(act, fs, 1.3, 0.7);
        const EpisodeResult e2 = run_episode(act, fs, 1.3, 0.7);
        identical = identical && e1.reward == e2.reward && e1.min_d_err == e2.min_d_err;
        detail("bit-identical repeated runs: %s", identical ? "yes" : "NO");
        pass = pass && identical;
    }
    return pass;
}

// 5. Benchmark overhead trend.
bool criterion_bench() {
    BenchConfig cfg;
    const auto rows = run_bench(cfg);
    bool decreasing = true;
    for (size_t i = 0; i < rows.size(); ++i) {
        detail("n=%2d  without %.2f us  with %.2f us  overhead %.1f%%", rows[i].n,
               rows[i].us_without, rows[i].us_with, rows[i].overhead_pct);
        if (i > 0) decreasing = decreasing && rows[i].overhead_pct < rows[i - 1].overhead_pct;
        if (rows[i].us_with <= rows[i].us_without) decreasing = false;
    }
    detail("overhead_pct strictly decreasing: %s", decreasing ? "yes" : "NO");
    return decreasing;
}

// 6. Fling policy learning.
bool criterion_fling_learning() {
    const FlingScene fs = FlingScene::standard();
    TrainConfig tc;  // 5000 episodes, seed 7
    const TrainResult tr = train(fs, tc);

    const size_t q = tr.curve.size() / 4;
    double first = 0, last = 0;
    for (size_t i = 0; i < q; ++i) first += tr.curve[i].mean_reward;
    for (size_t i = tr.curve.size() - q; i < tr.curve.size(); ++i)
        last += tr.curve[i].mean_reward;
    first /= q;
    last /= q;

    const EvalResult ev = evaluate(tr.policy, fs, 30, true, 12345);
    detail("deterministic success rate over 30 episodes: %.3f (>= 0.8)",
           ev.success_rate);
    detail("learning curve quartile means: first %.3f, final %.3f", first, last);
    detail("diverged training episodes: %d", tr.diverged_episodes);
    return ev.success_rate >= 0.8 && last > first;
}

// 7. Reward branch table.
bool criterion_reward() {
    const bool pass = reward(0.37, true) == 10.0 && reward(0.0, true) == 10.0 &&
                      reward(0.25, false) == -0.25 && reward(0.0, false) == 0.0;
    detail("success -> 10, fail -> -min_d_err, fail at 0 -> 0: %s",
           pass ? "exact" : "NO");
    return pass;
}

struct Criterion {
    int id;
    const char* name;
    bool (*fn)();
};

}  // namespace

int main(int argc, char** argv) {
    const Criterion criteria[] = {
        {1, "gradient correctness (forces vs finite differences)", criterion_gradient},
        {2, "helical buckling envelope convergence", criterion_buckling},
        {3, "Michell instability critical twist", criterion_michell},
        {4, "invariant suite", criterion_invariants},
        {5, "benchmark overhead trend", criterion_bench},
        {6, "fling policy learning", criterion_fling_learning},
        {7, "reward branch table", criterion_reward},
    };

    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quiet") == 0) {
            g_verbose = false;
            continue;
        }
        selected.insert(std::atoi(argv[i]));
    }

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        std::printf("CRITERION %d: %s\n", c.id, c.name);
        std::fflush(stdout);
        bool ok = false;
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            detail("exception: %s", e.what());
        }
        std::printf("CRITERION %d %s: %s\n", c.id, ok ? "PASS" : "FAIL", c.name);
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
