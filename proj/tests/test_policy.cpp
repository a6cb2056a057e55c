#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wiresim/policy.hpp"

using namespace wiresim;

namespace {

GaussianPolicy test_policy() {
    GaussianPolicy p = GaussianPolicy::initial(ActionBounds{}, 0.5, 2.0, 0.5, 2.0);
    // Non-trivial weights so gradients touch every parameter.
    for (int k = 0; k < 9; ++k) {
        p.weight(k, 0) = 0.03 * (k - 4);
        p.weight(k, 1) = -0.02 * k;
        p.bias(k) = 0.05 * std::sin(1.0 + k);
    }
    return p;
}

std::vector<BatchSample> synthetic_batch(const GaussianPolicy& p, int size,
                                         uint64_t seed) {
    std::vector<BatchSample> batch;
    Rng rng(seed);
    for (int i = 0; i < size; ++i) {
        const double alpha = rng.uniform(0.5, 2.0), beta = rng.uniform(0.5, 2.0);
        ActionSample s = sample_action(p, alpha, beta, rng);
        batch.push_back({alpha, beta, s.raw, s.log_prob, rng.uniform(-1.0, 10.0)});
    }
    return batch;
}

}  // namespace

TEST_CASE("vanishing std degenerates to the clamped mean action") {
    GaussianPolicy p = test_policy();
    p.bias(0) = 5.0;  // beyond the dy bound
    p.log_std.setConstant(std::log(1e-12));
    Rng rng(3);
    const ActionSample s = sample_action(p, 1.0, 1.0, rng);
    const FlingAction m = p.mean_action(1.0, 1.0);
    for (int k = 0; k < 9; ++k)
        CHECK(s.action.flat()[k] == doctest::Approx(m.flat()[k]).epsilon(1e-9));
    CHECK(m.flat()[0] == doctest::Approx(0.6));  // clamped to the bound
}

TEST_CASE("fixed seed reproduces the action sequence") {
    const GaussianPolicy p = test_policy();
    Rng a(11), b(11);
    for (int i = 0; i < 20; ++i) {
        const ActionSample sa = sample_action(p, 1.2, 0.8, a);
        const ActionSample sb = sample_action(p, 1.2, 0.8, b);
        CHECK(sa.raw == sb.raw);
        CHECK(sa.log_prob == sb.log_prob);
    }
}

TEST_CASE("sample mean approaches the policy mean") {
    const GaussianPolicy p = test_policy();
    Rng rng(5);
    Eigen::Matrix<double, 9, 1> acc = Eigen::Matrix<double, 9, 1>::Zero();
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) acc += sample_action(p, 1.0, 1.5, rng).raw;
    acc /= draws;
    const auto mu = p.mean(1.0, 1.5);
    for (int k = 0; k < 9; ++k) {
        const double sd = std::exp(p.log_std(k));
        CHECK(std::abs(acc(k) - mu(k)) < 3 * sd / std::sqrt(double(draws)) * 3);
    }
}

TEST_CASE("sampled actions never violate the bounds") {
    const GaussianPolicy p = test_policy();
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const ActionSample s = sample_action(p, 0.6, 1.9, rng);
        for (int w = 0; w < 3; ++w)
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(s.action.offsets[w][c]) <= p.bounds.bound(c) + 1e-12);
    }
}

TEST_CASE("zero advantages leave the policy unchanged") {
    const GaussianPolicy p = test_policy();
    TrainConfig tc;
    std::vector<BatchSample> batch = synthetic_batch(p, 16, 21);
    for (auto& s : batch) s.reward = 3.7;
    const GaussianPolicy q = update_policy(p, batch, 3.7, tc);
    CHECK(q.weight == p.weight);
    CHECK(q.bias == p.bias);
    CHECK(q.log_std == p.log_std);
}

TEST_CASE("a positive-advantage sample becomes more likely") {
    const GaussianPolicy p = test_policy();
    TrainConfig tc;
    // Ascent direction is a statement about one small step.
    tc.learning_rate = 1e-4;
    tc.epochs_per_batch = 1;
    std::vector<BatchSample> batch = synthetic_batch(p, 1, 33);
    batch[0].reward = 5.0;
    const GaussianPolicy q = update_policy(p, batch, 0.0, tc);
    CHECK(log_prob(q, batch[0].alpha, batch[0].beta, batch[0].raw) >
          log_prob(p, batch[0].alpha, batch[0].beta, batch[0].raw));
}

TEST_CASE("analytic surrogate gradient matches finite differences") {
    GaussianPolicy p = test_policy();
    const TrainConfig tc;
    std::vector<BatchSample> batch = synthetic_batch(p, 12, 55);
    // Shift the policy a little so the ratios are not all exactly 1.
    p.bias(2) += 0.02;
    p.weight(4, 1) -= 0.015;
    p.log_std(7) += 0.01;
    const double baseline = 1.0;

    Eigen::Matrix<double, 9, 2> dw;
    Eigen::Matrix<double, 9, 1> db, dls;
    surrogate_gradient(p, batch, baseline, tc.clip_ratio, dw, db, dls);

    const double h = 1e-6;
    auto fd = [&](double* param) {
        const double keep = *param;
        *param = keep + h;
        const double up = surrogate(p, batch, baseline, tc.clip_ratio);
        *param = keep - h;
        const double dn = surrogate(p, batch, baseline, tc.clip_ratio);
        *param = keep;
        return (up - dn) / (2 * h);
    };
    double worst = 0;
    for (int k = 0; k < 9; ++k) {
        for (int j = 0; j < 2; ++j) {
            const double g = fd(&p.weight(k, j));
            worst = std::max(worst, std::abs(g - dw(k, j)) / (std::abs(g) + 1e-7));
        }
        const double gb = fd(&p.bias(k));
        worst = std::max(worst, std::abs(gb - db(k)) / (std::abs(gb) + 1e-7));
        const double gs = fd(&p.log_std(k));
        worst = std::max(worst, std::abs(gs - dls(k)) / (std::abs(gs) + 1e-7));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("baseline estimator converges to the batch mean") {
    const double target = 4.2;
    double b = 0;
    for (int i = 0; i < 100; ++i) b = baseline_update(b, target, TrainConfig{}.baseline_decay);
    CHECK(std::abs(b - target) / target < 0.01);
}

TEST_CASE("evaluate of the untrained zero-mean policy never succeeds") {
    const FlingScene fs = FlingScene::standard();
    const GaussianPolicy p = GaussianPolicy::initial(fs.bounds, 0.5, 2.0, 0.5, 2.0);
    const EvalResult ev = evaluate(p, fs, 8, true, 99);
    CHECK(ev.success_rate == doctest::Approx(0.0));
    CHECK(ev.mean_reward < 0);
}

TEST_CASE("tiny training runs are fully deterministic") {
    const FlingScene fs = FlingScene::standard();
    TrainConfig tc;
    tc.total_episodes = 40;
    tc.batch_size = 20;
    tc.eval_episodes_per_batch = 0;
    const TrainResult a = train(fs, tc);
    const TrainResult b = train(fs, tc);
    REQUIRE(a.curve.size() == b.curve.size());
    CHECK(a.curve.size() == 2);
    for (size_t i = 0; i < a.curve.size(); ++i) {
        CHECK(a.curve[i].mean_reward == b.curve[i].mean_reward);
        CHECK(a.curve[i].std_reward == b.curve[i].std_reward);
    }
    CHECK(a.final_policy.weight == b.final_policy.weight);
    CHECK(a.final_policy.bias == b.final_policy.bias);
}
