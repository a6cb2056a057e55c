#pragma once

#include <vector>

#include "wiresim/dynamics.hpp"

namespace wiresim {

struct BenchRow {
    int n = 0;
    double us_without = 0;  // per step, elastic computation disabled
    double us_with = 0;     // per step, full model
    double overhead_pct = 0;
};

struct BenchConfig {
    std::vector<int> n_values = {20, 30, 40, 50, 60};
    int repeats = 5;
    int steps_per_measure = 3000;
    int warmup_steps = 200;
    double dt = 0.002;
};

// Median per-step wall time of an anchored swinging wire, with and without
// the rod-model computations.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

}  // namespace wiresim
