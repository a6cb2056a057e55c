#include "wiresim/bench.hpp"

#include <algorithm>
#include <chrono>

namespace wiresim {

namespace {

double per_step_us(int n, bool elastic, const BenchConfig& cfg) {
    RodState s = RodState::make(
        Centerline::straight(Vec3(0, 0, 1.0), Vec3(0, 1, 0), 2.0, n), Vec3(1, 0, 0));
    RodParams p = RodParams::uniform(1.0, 1.0, 2.0, n, 0.5);
    SceneConfig scene;
    scene.gravity = Vec3(0, 0, -9.81);
    scene.ground_height = 0.0;
    BoundaryCondition bc;
    bc.clamps.push_back({0, s.centerline.nodes[0], Vec3::Zero()});
    SimOptions opt;
    opt.elastic_enabled = elastic;

    for (int k = 0; k < cfg.warmup_steps; ++k) s = step(s, p, bc, scene, cfg.dt, opt);
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < cfg.steps_per_measure; ++k)
        s = step(s, p, bc, scene, cfg.dt, opt);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::micro>(t1 - t0).count() /
           cfg.steps_per_measure;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.n_values.empty()) throw ConfigError("bench needs at least one n");
    if (cfg.repeats < 1) throw ConfigError("bench needs at least one repeat");
    std::vector<BenchRow> rows;
    for (int n : cfg.n_values) {
        std::vector<double> without, with;
        for (int r = 0; r < cfg.repeats; ++r) {
            without.push_back(per_step_us(n, false, cfg));
            with.push_back(per_step_us(n, true, cfg));
        }
        std::sort(without.begin(), without.end());
        std::sort(with.begin(), with.end());
        BenchRow row;
        row.n = n;
        row.us_without = without[without.size() / 2];
        row.us_with = with[with.size() / 2];
        row.overhead_pct = 100.0 * (row.us_with - row.us_without) / row.us_without;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace wiresim
