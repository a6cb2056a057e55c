#pragma once

#include <array>
#include <vector>

#include "wiresim/fling.hpp"
#include "wiresim/rng.hpp"

namespace wiresim {

// Diagonal Gaussian over the 9-D action, mean affine in the normalized
// observation (alpha, beta).
struct GaussianPolicy {
    Eigen::Matrix<double, 9, 2> weight = Eigen::Matrix<double, 9, 2>::Zero();
    Eigen::Matrix<double, 9, 1> bias = Eigen::Matrix<double, 9, 1>::Zero();
    Eigen::Matrix<double, 9, 1> log_std = Eigen::Matrix<double, 9, 1>::Zero();
    ActionBounds bounds;
    double alpha_lo = 0.5, alpha_hi = 2.0;
    double beta_lo = 0.5, beta_hi = 2.0;

    static GaussianPolicy initial(const ActionBounds& bounds, double alpha_lo,
                                  double alpha_hi, double beta_lo, double beta_hi);

    Eigen::Vector2d normalize_obs(double alpha, double beta) const;
    Eigen::Matrix<double, 9, 1> mean(double alpha, double beta) const;
    FlingAction mean_action(double alpha, double beta) const;  // clamped mean
};

struct ActionSample {
    FlingAction action;  // clamped, as executed
    Eigen::Matrix<double, 9, 1> raw;  // pre-clamp Gaussian draw
    double log_prob = 0;
};

ActionSample sample_action(const GaussianPolicy& policy, double alpha, double beta,
                           Rng& rng);

double log_prob(const GaussianPolicy& policy, double alpha, double beta,
                const Eigen::Matrix<double, 9, 1>& raw);

struct TrainConfig {
    int total_episodes = 5000;
    int batch_size = 50;
    double learning_rate = 0.025;
    double clip_ratio = 0.15;
    int epochs_per_batch = 6;
    double baseline_decay = 0.25;
    double min_std_fraction = 0.05;  // of each action bound
    uint64_t seed = 7;
    double alpha_lo = 0.5, alpha_hi = 2.0;
    double beta_lo = 0.5, beta_hi = 2.0;
    int eval_episodes_per_batch = 10;  // deterministic probes for best-so-far

    void validate() const;
};

struct BatchSample {
    double alpha = 0, beta = 0;
    Eigen::Matrix<double, 9, 1> raw = Eigen::Matrix<double, 9, 1>::Zero();
    double log_prob_old = 0;
    double reward = 0;
};

// One PPO-style update: several gradient-ascent epochs on the clipped
// surrogate with advantages (reward - baseline). Returns the updated policy.
GaussianPolicy update_policy(const GaussianPolicy& policy,
                             const std::vector<BatchSample>& batch, double baseline,
                             const TrainConfig& tc);

// The clipped surrogate and its analytic parameter gradient (exposed so the
// finite-difference oracle in the tests can check it).
double surrogate(const GaussianPolicy& policy, const std::vector<BatchSample>& batch,
                 double baseline, double clip_ratio);
void surrogate_gradient(const GaussianPolicy& policy,
                        const std::vector<BatchSample>& batch, double baseline,
                        double clip_ratio, Eigen::Matrix<double, 9, 2>& d_weight,
                        Eigen::Matrix<double, 9, 1>& d_bias,
                        Eigen::Matrix<double, 9, 1>& d_log_std);

inline double baseline_update(double baseline, double batch_mean, double decay) {
    return (1 - decay) * baseline + decay * batch_mean;
}

struct CurvePoint {
    int batch = 0;
    int episodes_done = 0;
    double mean_reward = 0;
    double std_reward = 0;
    double success_rate = 0;
};

struct TrainResult {
    GaussianPolicy policy;       // best-so-far by deterministic evaluation
    GaussianPolicy final_policy; // after the last update
    std::vector<CurvePoint> curve;
    double best_eval_reward = 0;
    int diverged_episodes = 0;
};

struct EvalResult {
    double success_rate = 0;
    double mean_reward = 0;
};

TrainResult train(const FlingScene& fs, const TrainConfig& tc);

EvalResult evaluate(const GaussianPolicy& policy, const FlingScene& fs, int episodes,
                    bool deterministic, uint64_t seed,
                    std::vector<EpisodeResult>* episode_log = nullptr,
                    bool record_traces = false);

}  // namespace wiresim
