#include "wiresim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace wiresim {

GaussianPolicy GaussianPolicy::initial(const ActionBounds& bounds, double alpha_lo,
                                       double alpha_hi, double beta_lo,
                                       double beta_hi) {
    GaussianPolicy p;
    p.bounds = bounds;
    p.alpha_lo = alpha_lo;
    p.alpha_hi = alpha_hi;
    p.beta_lo = beta_lo;
    p.beta_hi = beta_hi;
    for (int k = 0; k < 9; ++k)
        p.log_std(k) = std::log(0.3 * bounds.bound(k % 3));
    return p;
}

Eigen::Vector2d GaussianPolicy::normalize_obs(double alpha, double beta) const {
    return Eigen::Vector2d(2 * (alpha - alpha_lo) / (alpha_hi - alpha_lo) - 1,
                           2 * (beta - beta_lo) / (beta_hi - beta_lo) - 1);
}

Eigen::Matrix<double, 9, 1> GaussianPolicy::mean(double alpha, double beta) const {
    return weight * normalize_obs(alpha, beta) + bias;
}

FlingAction GaussianPolicy::mean_action(double alpha, double beta) const {
    std::array<double, 9> flat{};
    const auto mu = mean(alpha, beta);
    for (int k = 0; k < 9; ++k) flat[k] = mu(k);
    FlingAction a = FlingAction::from_flat(flat);
    a.clamp(bounds);
    return a;
}

ActionSample sample_action(const GaussianPolicy& policy, double alpha, double beta,
                           Rng& rng) {
    const auto mu = policy.mean(alpha, beta);
    ActionSample s;
    for (int k = 0; k < 9; ++k)
        s.raw(k) = mu(k) + std::exp(policy.log_std(k)) * rng.normal();
    s.log_prob = log_prob(policy, alpha, beta, s.raw);
    std::array<double, 9> flat{};
    for (int k = 0; k < 9; ++k) flat[k] = s.raw(k);
    s.action = FlingAction::from_flat(flat);
    s.action.clamp(policy.bounds);
    return s;
}

double log_prob(const GaussianPolicy& policy, double alpha, double beta,
                const Eigen::Matrix<double, 9, 1>& raw) {
    const auto mu = policy.mean(alpha, beta);
    double lp = 0;
    for (int k = 0; k < 9; ++k) {
        const double sd = std::exp(policy.log_std(k));
        const double z = (raw(k) - mu(k)) / sd;
        lp += -0.5 * z * z - policy.log_std(k) - 0.5 * std::log(2 * M_PI);
    }
    return lp;
}

void TrainConfig::validate() const {
    if (total_episodes < 1 || batch_size < 1) throw ConfigError("counts must be positive");
    if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
    if (!(clip_ratio > 0 && clip_ratio < 1)) throw ConfigError("clip_ratio in (0,1)");
    if (!(baseline_decay > 0 && baseline_decay <= 1))
        throw ConfigError("baseline_decay in (0,1]");
    if (epochs_per_batch < 1) throw ConfigError("epochs_per_batch must be positive");
    if (!(alpha_hi > alpha_lo) || !(beta_hi > beta_lo))
        throw ConfigError("observation ranges must be nonempty");
}

double surrogate(const GaussianPolicy& policy, const std::vector<BatchSample>& batch,
                 double baseline, double clip_ratio) {
    double total = 0;
    for (const auto& s : batch) {
        const double adv = s.reward - baseline;
        const double ratio = std::exp(log_prob(policy, s.alpha, s.beta, s.raw) -
                                      s.log_prob_old);
        const double clipped = std::clamp(ratio, 1 - clip_ratio, 1 + clip_ratio);
        total += std::min(ratio * adv, clipped * adv);
    }
    return total / static_cast<double>(batch.size());
}

void surrogate_gradient(const GaussianPolicy& policy,
                        const std::vector<BatchSample>& batch, double baseline,
                        double clip_ratio, Eigen::Matrix<double, 9, 2>& d_weight,
                        Eigen::Matrix<double, 9, 1>& d_bias,
                        Eigen::Matrix<double, 9, 1>& d_log_std) {
    d_weight.setZero();
    d_bias.setZero();
    d_log_std.setZero();
    for (const auto& s : batch) {
        const double adv = s.reward - baseline;
        const double lp = log_prob(policy, s.alpha, s.beta, s.raw);
        const double ratio = std::exp(lp - s.log_prob_old);
        // min(ratio*A, clip(ratio)*A) has zero gradient once the clipped
        // branch is active and smaller.
        const bool active = adv >= 0 ? ratio <= 1 + clip_ratio : ratio >= 1 - clip_ratio;
        if (!active) continue;
        if (!std::isfinite(ratio))
            throw SimError("policy update: non-finite ratio in batch");

        const auto mu = policy.mean(s.alpha, s.beta);
        const Eigen::Vector2d x = policy.normalize_obs(s.alpha, s.beta);
        const double scale = ratio * adv;
        for (int k = 0; k < 9; ++k) {
            const double sd = std::exp(policy.log_std(k));
            const double z = (s.raw(k) - mu(k)) / sd;
            const double dmu = z / sd;        // d logp / d mu_k
            const double dls = z * z - 1.0;   // d logp / d log_std_k
            d_bias(k) += scale * dmu;
            d_weight.row(k) += scale * dmu * x.transpose();
            d_log_std(k) += scale * dls;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    d_weight *= inv;
    d_bias *= inv;
    d_log_std *= inv;
}

GaussianPolicy update_policy(const GaussianPolicy& policy,
                             const std::vector<BatchSample>& batch, double baseline,
                             const TrainConfig& tc) {
    if (batch.empty()) throw ConfigError("policy update needs a nonempty batch");
    GaussianPolicy out = policy;
    Eigen::Matrix<double, 9, 2> dw;
    Eigen::Matrix<double, 9, 1> db, dls;
    for (int e = 0; e < tc.epochs_per_batch; ++e) {
        surrogate_gradient(out, batch, baseline, tc.clip_ratio, dw, db, dls);
        out.weight += tc.learning_rate * dw;
        out.bias += tc.learning_rate * db;
        out.log_std += tc.learning_rate * dls;
        for (int k = 0; k < 9; ++k)
            out.log_std(k) = std::max(
                out.log_std(k), std::log(tc.min_std_fraction * policy.bounds.bound(k % 3)));
    }
    return out;
}

namespace {

int worker_count() {
    if (const char* env = std::getenv("WIRESIM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

struct EpisodeJob {
    double alpha = 0, beta = 0;
    ActionSample sample;
    EpisodeResult result;
};

// Episodes are deterministic given their global index; threads only change
// the execution order.
void run_jobs(std::vector<EpisodeJob>& jobs, const FlingScene& fs) {
    const int threads = std::min<int>(worker_count(), static_cast<int>(jobs.size()));
    if (threads <= 1) {
        for (auto& j : jobs)
            j.result = run_episode(j.sample.action, fs, j.alpha, j.beta);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (size_t e = t; e < jobs.size(); e += threads)
                jobs[e].result =
                    run_episode(jobs[e].sample.action, fs, jobs[e].alpha, jobs[e].beta);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

TrainResult train(const FlingScene& fs, const TrainConfig& tc) {
    tc.validate();
    fs.validate();

    TrainResult out;
    GaussianPolicy policy = GaussianPolicy::initial(fs.bounds, tc.alpha_lo,
                                                    tc.alpha_hi, tc.beta_lo, tc.beta_hi);
    const int bsize = std::min(tc.batch_size, tc.total_episodes);
    const int batches = tc.total_episodes / bsize;
    double baseline = 0;
    bool baseline_ready = false;
    out.best_eval_reward = -std::numeric_limits<double>::infinity();

    long episode_counter = 0;
    for (int b = 0; b < batches; ++b) {
        std::vector<EpisodeJob> jobs(bsize);
        for (int i = 0; i < bsize; ++i) {
            Rng rng(tc.seed, 2 * static_cast<uint64_t>(episode_counter + i) + 1);
            jobs[i].alpha = rng.uniform(tc.alpha_lo, tc.alpha_hi);
            jobs[i].beta = rng.uniform(tc.beta_lo, tc.beta_hi);
            jobs[i].sample = sample_action(policy, jobs[i].alpha, jobs[i].beta, rng);
        }
        episode_counter += bsize;
        run_jobs(jobs, fs);

        std::vector<BatchSample> batch(bsize);
        double sum = 0, sum2 = 0;
        int successes = 0;
        for (int i = 0; i < bsize; ++i) {
            batch[i] = {jobs[i].alpha, jobs[i].beta, jobs[i].sample.raw,
                        jobs[i].sample.log_prob, jobs[i].result.reward};
            sum += jobs[i].result.reward;
            sum2 += jobs[i].result.reward * jobs[i].result.reward;
            successes += jobs[i].result.success ? 1 : 0;
            out.diverged_episodes += jobs[i].result.diverged ? 1 : 0;
        }
        const double mean_r = sum / bsize;
        const double var = std::max(0.0, sum2 / bsize - mean_r * mean_r);

        if (!baseline_ready) {
            baseline = mean_r;
            baseline_ready = true;
        }
        policy = update_policy(policy, batch, baseline, tc);
        baseline = baseline_update(baseline, mean_r, tc.baseline_decay);

        out.curve.push_back({b, static_cast<int>(episode_counter), mean_r,
                             std::sqrt(var),
                             static_cast<double>(successes) / bsize});

        if (tc.eval_episodes_per_batch > 0) {
            const EvalResult ev = evaluate(policy, fs, tc.eval_episodes_per_batch,
                                           true, tc.seed + 982451);
            if (ev.mean_reward > out.best_eval_reward) {
                out.best_eval_reward = ev.mean_reward;
                out.policy = policy;
            }
        }
    }
    out.final_policy = policy;
    if (!(out.best_eval_reward > -std::numeric_limits<double>::infinity()))
        out.policy = policy;
    return out;
}

EvalResult evaluate(const GaussianPolicy& policy, const FlingScene& fs, int episodes,
                    bool deterministic, uint64_t seed,
                    std::vector<EpisodeResult>* episode_log, bool record_traces) {
    if (episodes < 1) throw ConfigError("evaluate needs at least one episode");
    std::vector<EpisodeJob> jobs(episodes);
    for (int i = 0; i < episodes; ++i) {
        Rng rng(seed, 2 * static_cast<uint64_t>(i));
        jobs[i].alpha = rng.uniform(policy.alpha_lo, policy.alpha_hi);
        jobs[i].beta = rng.uniform(policy.beta_lo, policy.beta_hi);
        if (deterministic) {
            jobs[i].sample.action = policy.mean_action(jobs[i].alpha, jobs[i].beta);
        } else {
            jobs[i].sample = sample_action(policy, jobs[i].alpha, jobs[i].beta, rng);
        }
    }
    if (record_traces) {
        for (auto& j : jobs)
            j.result = run_episode(j.sample.action, fs, j.alpha, j.beta, true);
    } else {
        run_jobs(jobs, fs);
    }

    EvalResult ev;
    for (const auto& j : jobs) {
        ev.mean_reward += j.result.reward;
        ev.success_rate += j.result.success ? 1 : 0;
        if (episode_log) episode_log->push_back(j.result);
    }
    ev.mean_reward /= episodes;
    ev.success_rate /= episodes;
    return ev;
}

}  // namespace wiresim
