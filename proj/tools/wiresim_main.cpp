#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "wiresim/bench.hpp"
#include "wiresim/io.hpp"

using namespace wiresim;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "wiresim 1.0.0";

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

int cmd_validate_buckling(const std::string& config, const std::string& out) {
    Timer timer;
    BucklingConfig cfg;
    io::json cfg_json = io::json::object();
    if (!config.empty()) {
        cfg_json = io::load_json(config);
        cfg = io::buckling_config_from_json(cfg_json);
    }
    io::RunManifest manifest{"validate buckling", cfg_json, cfg.seed, kVersion, {}, 0};

    const auto results = run_helical_buckling(cfg);
    const std::string summary = out_path(out, "buckling_summary.csv");
    io::write_buckling_summary_csv(results, summary);
    manifest.outputs.push_back(summary);
    for (const auto& r : results) {
        const std::string env = out_path(out, "envelope_n" + std::to_string(r.n) + ".csv");
        io::write_envelope_csv(r, env);
        manifest.outputs.push_back(env);
    }

    bool decreasing = true;
    for (size_t i = 1; i < results.size(); ++i)
        decreasing = decreasing && results[i].avg_error < results[i - 1].avg_error;
    std::printf("buckling: avg_error");
    for (const auto& r : results) std::printf(" %.6f(n=%d)", r.avg_error, r.n);
    std::printf("\nconvergence %s\n", decreasing ? "PASS" : "FAIL");

    manifest.wall_seconds = timer.seconds();
    io::write_manifest(manifest, out_path(out, "manifest.json"));
    return decreasing ? 0 : 1;
}

int cmd_validate_michell(const std::string& config, const std::string& out) {
    Timer timer;
    MichellConfig cfg;
    io::json cfg_json = io::json::object();
    if (!config.empty()) {
        cfg_json = io::load_json(config);
        cfg = io::michell_config_from_json(cfg_json);
    }
    io::RunManifest manifest{"validate michell", cfg_json, cfg.seed, kVersion, {}, 0};

    const auto results = run_michell(cfg);
    const std::string sweep = out_path(out, "michell_sweep.csv");
    io::write_michell_csv(results, sweep);
    manifest.outputs.push_back(sweep);

    bool pass = true;
    for (const auto& r : results) {
        std::printf("michell beta/alpha=%.3f: measured %.4f analytic %.4f (%.2f%%) %s\n",
                    r.beta_over_alpha, r.theta_c_measured, r.theta_c_analytic,
                    r.deviation_pct, r.deviation_pct <= 5.0 ? "PASS" : "FAIL");
        pass = pass && r.deviation_pct <= 5.0;
    }
    manifest.wall_seconds = timer.seconds();
    io::write_manifest(manifest, out_path(out, "manifest.json"));
    return pass ? 0 : 1;
}

int cmd_bench(const std::vector<int>& n_values, int repeats, int steps,
              const std::string& out) {
    Timer timer;
    BenchConfig cfg;
    if (!n_values.empty()) cfg.n_values = n_values;
    cfg.repeats = repeats;
    cfg.steps_per_measure = steps;
    io::RunManifest manifest{"bench", io::json{{"n_values", cfg.n_values},
                                               {"repeats", cfg.repeats},
                                               {"steps", cfg.steps_per_measure}},
                             0, kVersion, {}, 0};

    const auto rows = run_bench(cfg);
    const std::string path = out_path(out, "bench.csv");
    {
        std::ofstream f(path);
        f << "n,time_without_us,time_with_us,overhead_pct\n";
        f.precision(6);
        for (const auto& r : rows)
            f << r.n << "," << r.us_without << "," << r.us_with << ","
              << r.overhead_pct << "\n";
    }
    manifest.outputs.push_back(path);
    for (const auto& r : rows)
        std::printf("n=%3d  without %.2f us  with %.2f us  overhead %.1f%%\n", r.n,
                    r.us_without, r.us_with, r.overhead_pct);
    manifest.wall_seconds = timer.seconds();
    io::write_manifest(manifest, out_path(out, "manifest.json"));
    return 0;
}

int cmd_fling_train(const std::string& scene_path, const std::string& train_path,
                    int episodes, long seed, const std::string& out) {
    Timer timer;
    FlingScene scene = FlingScene::standard();
    io::json scene_json = io::scene_to_json(scene);
    if (!scene_path.empty()) {
        scene_json = io::load_json(scene_path);
        scene = io::scene_from_json(scene_json);
    }
    TrainConfig tc;
    if (!train_path.empty()) tc = io::train_config_from_json(io::load_json(train_path));
    if (episodes > 0) tc.total_episodes = episodes;
    if (seed >= 0) tc.seed = static_cast<uint64_t>(seed);

    io::RunManifest manifest{
        "fling train",
        io::json{{"scene", scene_json}, {"train", io::train_config_to_json(tc)}},
        tc.seed, kVersion, {}, 0};

    const TrainResult result = train(scene, tc);
    const std::string ckpt = out_path(out, "policy.json");
    io::save_json(io::policy_to_json(result.policy), ckpt);
    const std::string ckpt_final = out_path(out, "policy_final.json");
    io::save_json(io::policy_to_json(result.final_policy), ckpt_final);
    const std::string curve = out_path(out, "learning_curve.csv");
    io::write_curve_csv(result.curve, curve);
    manifest.outputs = {ckpt, ckpt_final, curve};

    std::printf("trained %d episodes (%zu batches), best eval reward %.3f, "
                "%d diverged episodes\n",
                tc.total_episodes, result.curve.size(), result.best_eval_reward,
                result.diverged_episodes);
    manifest.wall_seconds = timer.seconds();
    io::write_manifest(manifest, out_path(out, "manifest.json"));
    return 0;
}

int cmd_fling_eval(const std::string& scene_path, const std::string& ckpt,
                   int episodes, long seed, double min_success, bool export_traces,
                   const std::string& out) {
    Timer timer;
    FlingScene scene = FlingScene::standard();
    io::json scene_json = io::scene_to_json(scene);
    if (!scene_path.empty()) {
        scene_json = io::load_json(scene_path);
        scene = io::scene_from_json(scene_json);
    }
    const GaussianPolicy policy = io::policy_from_json(io::load_json(ckpt));
    const uint64_t eval_seed = seed >= 0 ? static_cast<uint64_t>(seed) : 12345;

    io::RunManifest manifest{"fling eval",
                             io::json{{"scene", scene_json},
                                      {"checkpoint", ckpt},
                                      {"episodes", episodes},
                                      {"min_success", min_success}},
                             eval_seed, kVersion, {}, 0};

    std::vector<EpisodeResult> log;
    const EvalResult ev =
        evaluate(policy, scene, episodes, true, eval_seed, &log, export_traces);

    const std::string summary = out_path(out, "eval.json");
    io::save_json(io::json{{"success_rate", ev.success_rate},
                           {"mean_reward", ev.mean_reward},
                           {"episodes", episodes}},
                  summary);
    manifest.outputs.push_back(summary);

    const std::string jsonl = out_path(out, "episodes.jsonl");
    for (size_t i = 0; i < log.size(); ++i) {
        io::append_jsonl(io::json{{"episode", i},
                                  {"reward", log[i].reward},
                                  {"min_d_err", log[i].min_d_err},
                                  {"success", log[i].success},
                                  {"diverged", log[i].diverged}},
                         jsonl);
        if (export_traces) {
            const std::string tr =
                out_path(out, "trace_ep" + std::to_string(i) + ".csv");
            io::write_trace_csv(log[i].trace, tr);
            manifest.outputs.push_back(tr);
        }
    }
    manifest.outputs.push_back(jsonl);

    std::printf("eval: success_rate %.3f mean_reward %.3f over %d episodes\n",
                ev.success_rate, ev.mean_reward, episodes);
    manifest.wall_seconds = timer.seconds();
    io::write_manifest(manifest, out_path(out, "manifest.json"));
    return ev.success_rate >= min_success ? 0 : 1;
}

int cmd_export(const std::string& trace_path, const std::string& format,
               const std::string& out) {
    const auto trace = io::read_trace_csv(trace_path);
    if (format == "csv") {
        io::write_trace_csv(trace, out);
    } else if (format == "obj") {
        io::write_trace_obj(trace, out);
    } else {
        std::fprintf(stderr, "unknown export format: %s\n", format.c_str());
        return 2;
    }
    std::printf("exported %zu frames to %s\n", trace.size(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete elastic rod wire simulator: validation, benchmarks, "
                 "and the fling task"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "Analytic validation experiments");
    validate->require_subcommand(1);
    std::string v_config, v_out = "out/validate";
    auto* buckling = validate->add_subcommand("buckling", "Localized helical buckling");
    buckling->add_option("--config", v_config, "JSON config");
    buckling->add_option("--out", v_out, "output directory");
    auto* michell = validate->add_subcommand("michell", "Ring twist instability");
    michell->add_option("--config", v_config, "JSON config");
    michell->add_option("--out", v_out, "output directory");

    // bench
    auto* bench = app.add_subcommand("bench", "Per-step timing with/without rod forces");
    std::vector<int> b_n;
    int b_repeats = 5, b_steps = 3000;
    std::string b_out = "out/bench";
    bench->add_option("--n", b_n, "section counts")->delimiter(',');
    bench->add_option("--repeats", b_repeats, "timing repeats (median)");
    bench->add_option("--steps", b_steps, "steps per measurement");
    bench->add_option("--out", b_out, "output directory");

    // fling
    auto* fling = app.add_subcommand("fling", "Fling task training and evaluation");
    fling->require_subcommand(1);
    std::string f_scene, f_train_cfg, f_ckpt, f_out = "out/fling";
    int f_episodes = 0, f_eval_episodes = 30;
    long f_seed = -1;
    double f_min_success = 0.0;
    bool f_traces = false;
    auto* ftrain = fling->add_subcommand("train", "Train the fling policy");
    ftrain->add_option("--config", f_scene, "scene JSON");
    ftrain->add_option("--train-config", f_train_cfg, "training JSON");
    ftrain->add_option("--episodes", f_episodes, "total episodes");
    ftrain->add_option("--seed", f_seed, "master seed");
    ftrain->add_option("--out", f_out, "output directory");
    auto* feval = fling->add_subcommand("eval", "Evaluate a checkpoint");
    feval->add_option("--config", f_scene, "scene JSON");
    feval->add_option("--checkpoint", f_ckpt, "policy checkpoint")->required();
    feval->add_option("--episodes", f_eval_episodes, "evaluation episodes");
    feval->add_option("--seed", f_seed, "evaluation seed");
    feval->add_option("--min-success", f_min_success, "success-rate gate (exit 1 below)");
    feval->add_flag("--export-traces", f_traces, "write one trace CSV per episode");
    feval->add_option("--out", f_out, "output directory");

    // export
    auto* exp = app.add_subcommand("export", "Re-export a trace as CSV or OBJ");
    std::string e_trace, e_format = "csv", e_out = "trace_out.csv";
    exp->add_option("--trace", e_trace, "input trace CSV")->required();
    exp->add_option("--format", e_format, "csv or obj");
    exp->add_option("--out", e_out, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (buckling->parsed()) return cmd_validate_buckling(v_config, v_out);
        if (michell->parsed()) return cmd_validate_michell(v_config, v_out);
        if (bench->parsed()) return cmd_bench(b_n, b_repeats, b_steps, b_out);
        if (ftrain->parsed())
            return cmd_fling_train(f_scene, f_train_cfg, f_episodes, f_seed, f_out);
        if (feval->parsed())
            return cmd_fling_eval(f_scene, f_ckpt, f_eval_episodes, f_seed,
                                  f_min_success, f_traces, f_out);
        if (exp->parsed()) return cmd_export(e_trace, e_format, e_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SimError& e) {
        std::fprintf(stderr, "simulation error: %s\n", e.what());
        return 1;
    }
    return 2;
}
