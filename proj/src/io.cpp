#include "wiresim/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wiresim::io {

namespace {

Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec3(const json& j, const char* key, Vec3& out) {
    if (j.contains(key)) out = vec3_from(j.at(key));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    return f;
}

}  // namespace

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void save_json(const json& j, const std::string& path) {
    auto f = open_out(path);
    f << j.dump(2) << "\n";
}

FlingScene scene_from_json(const json& j) {
    FlingScene fs = FlingScene::standard();
    maybe_vec3(j, "gravity", fs.scene.gravity);
    if (j.contains("ground_height"))
        fs.scene.ground_height = j.at("ground_height").get<double>();
    if (j.contains("obstacles")) {
        fs.scene.obstacles.clear();
        for (const auto& ob : j.at("obstacles"))
            fs.scene.obstacles.push_back(
                {vec3_from(ob.at("center")), vec3_from(ob.at("half_extents"))});
    }
    maybe(j, "contact_stiffness", fs.scene.contact_stiffness);
    maybe(j, "contact_damping", fs.scene.contact_damping);
    maybe(j, "contact_friction", fs.scene.contact_friction);
    maybe_vec3(j, "anchor", fs.anchor);
    maybe_vec3(j, "gripper_start", fs.gripper_start);
    maybe(j, "wire_length", fs.wire_length);
    maybe(j, "sections", fs.sections);
    maybe(j, "wire_mass", fs.wire_mass);
    maybe(j, "wire_damping", fs.wire_damping);
    maybe(j, "max_dy", fs.bounds.max_dy);
    maybe(j, "max_dz", fs.bounds.max_dz);
    maybe(j, "max_pitch", fs.bounds.max_pitch);
    maybe(j, "control_steps", fs.control_steps);
    maybe(j, "fling_duration", fs.fling_duration);
    maybe(j, "dt", fs.dt);
    maybe(j, "settle_time", fs.settle_time);
    maybe(j, "settle_kinetic_tol", fs.settle_kinetic_tol);
    fs.validate();
    return fs;
}

json scene_to_json(const FlingScene& fs) {
    json obstacles = json::array();
    for (const Box& b : fs.scene.obstacles)
        obstacles.push_back(
            {{"center", vec3_to(b.center)}, {"half_extents", vec3_to(b.half_extents)}});
    return json{{"gravity", vec3_to(fs.scene.gravity)},
                {"ground_height", fs.scene.ground_height.value_or(0.0)},
                {"obstacles", obstacles},
                {"contact_stiffness", fs.scene.contact_stiffness},
                {"contact_damping", fs.scene.contact_damping},
                {"contact_friction", fs.scene.contact_friction},
                {"anchor", vec3_to(fs.anchor)},
                {"gripper_start", vec3_to(fs.gripper_start)},
                {"wire_length", fs.wire_length},
                {"sections", fs.sections},
                {"wire_mass", fs.wire_mass},
                {"wire_damping", fs.wire_damping},
                {"max_dy", fs.bounds.max_dy},
                {"max_dz", fs.bounds.max_dz},
                {"max_pitch", fs.bounds.max_pitch},
                {"control_steps", fs.control_steps},
                {"fling_duration", fs.fling_duration},
                {"dt", fs.dt},
                {"settle_time", fs.settle_time},
                {"settle_kinetic_tol", fs.settle_kinetic_tol}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig tc;
    maybe(j, "total_episodes", tc.total_episodes);
    maybe(j, "batch_size", tc.batch_size);
    maybe(j, "learning_rate", tc.learning_rate);
    maybe(j, "clip_ratio", tc.clip_ratio);
    maybe(j, "epochs_per_batch", tc.epochs_per_batch);
    maybe(j, "baseline_decay", tc.baseline_decay);
    maybe(j, "min_std_fraction", tc.min_std_fraction);
    maybe(j, "seed", tc.seed);
    maybe(j, "alpha_lo", tc.alpha_lo);
    maybe(j, "alpha_hi", tc.alpha_hi);
    maybe(j, "beta_lo", tc.beta_lo);
    maybe(j, "beta_hi", tc.beta_hi);
    maybe(j, "eval_episodes_per_batch", tc.eval_episodes_per_batch);
    tc.validate();
    return tc;
}

json train_config_to_json(const TrainConfig& tc) {
    return json{{"total_episodes", tc.total_episodes},
                {"batch_size", tc.batch_size},
                {"learning_rate", tc.learning_rate},
                {"clip_ratio", tc.clip_ratio},
                {"epochs_per_batch", tc.epochs_per_batch},
                {"baseline_decay", tc.baseline_decay},
                {"min_std_fraction", tc.min_std_fraction},
                {"seed", tc.seed},
                {"alpha_lo", tc.alpha_lo},
                {"alpha_hi", tc.alpha_hi},
                {"beta_lo", tc.beta_lo},
                {"beta_hi", tc.beta_hi},
                {"eval_episodes_per_batch", tc.eval_episodes_per_batch}};
}

BucklingConfig buckling_config_from_json(const json& j) {
    BucklingConfig cfg;
    maybe(j, "length", cfg.length);
    maybe(j, "alpha", cfg.alpha);
    maybe(j, "beta", cfg.beta);
    maybe(j, "turns", cfg.turns);
    maybe(j, "end_shift", cfg.end_shift);
    maybe(j, "n_values", cfg.n_values);
    maybe(j, "twist_increments", cfg.twist_increments);
    maybe(j, "shift_increments", cfg.shift_increments);
    maybe(j, "steps_per_increment", cfg.steps_per_increment);
    maybe(j, "dt", cfg.dt);
    maybe(j, "ramp_damping", cfg.ramp_damping);
    maybe(j, "final_relax_steps", cfg.final_relax_steps);
    maybe(j, "kinetic_tol", cfg.kinetic_tol);
    maybe(j, "mass_density", cfg.mass_density);
    maybe(j, "perturbation", cfg.perturbation);
    maybe(j, "seed", cfg.seed);
    cfg.validate();
    return cfg;
}

MichellConfig michell_config_from_json(const json& j) {
    MichellConfig cfg;
    maybe(j, "alpha", cfg.alpha);
    maybe(j, "beta_over_alpha", cfg.beta_over_alpha);
    maybe(j, "n", cfg.n);
    maybe(j, "radius", cfg.radius);
    maybe(j, "twist_step", cfg.twist_step);
    maybe(j, "perturb_amplitude", cfg.perturb_amplitude);
    maybe(j, "buckle_threshold", cfg.buckle_threshold);
    maybe(j, "probe_time", cfg.probe_time);
    maybe(j, "probe_damping", cfg.probe_damping);
    maybe(j, "dt", cfg.dt);
    maybe(j, "mass_density", cfg.mass_density);
    maybe(j, "seed", cfg.seed);
    cfg.validate();
    return cfg;
}

GaussianPolicy policy_from_json(const json& j) {
    GaussianPolicy p;
    p.bounds.max_dy = j.at("max_dy").get<double>();
    p.bounds.max_dz = j.at("max_dz").get<double>();
    p.bounds.max_pitch = j.at("max_pitch").get<double>();
    p.alpha_lo = j.at("alpha_lo").get<double>();
    p.alpha_hi = j.at("alpha_hi").get<double>();
    p.beta_lo = j.at("beta_lo").get<double>();
    p.beta_hi = j.at("beta_hi").get<double>();
    const auto w = j.at("weight");
    const auto b = j.at("bias");
    const auto ls = j.at("log_std");
    if (w.size() != 9 || b.size() != 9 || ls.size() != 9)
        throw ConfigError("policy checkpoint has wrong shapes");
    for (int k = 0; k < 9; ++k) {
        p.weight(k, 0) = w[k][0].get<double>();
        p.weight(k, 1) = w[k][1].get<double>();
        p.bias(k) = b[k].get<double>();
        p.log_std(k) = ls[k].get<double>();
    }
    return p;
}

json policy_to_json(const GaussianPolicy& p) {
    json w = json::array(), b = json::array(), ls = json::array();
    for (int k = 0; k < 9; ++k) {
        w.push_back(json::array({p.weight(k, 0), p.weight(k, 1)}));
        b.push_back(p.bias(k));
        ls.push_back(p.log_std(k));
    }
    return json{{"weight", w},
                {"bias", b},
                {"log_std", ls},
                {"max_dy", p.bounds.max_dy},
                {"max_dz", p.bounds.max_dz},
                {"max_pitch", p.bounds.max_pitch},
                {"alpha_lo", p.alpha_lo},
                {"alpha_hi", p.alpha_hi},
                {"beta_lo", p.beta_lo},
                {"beta_hi", p.beta_hi}};
}

void write_trace_csv(const std::vector<TraceFrame>& trace, const std::string& path) {
    auto f = open_out(path);
    f.precision(17);
    for (const auto& frame : trace) {
        f << frame.time;
        for (const Vec3& x : frame.nodes) f << "," << x.x() << "," << x.y() << "," << x.z();
        f << "\n";
    }
}

std::vector<TraceFrame> read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::vector<TraceFrame> trace;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        TraceFrame frame;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() < 4 || (vals.size() - 1) % 3 != 0)
            throw ConfigError("malformed trace row in " + path);
        frame.time = vals[0];
        for (size_t i = 1; i + 2 < vals.size() + 1; i += 3)
            frame.nodes.emplace_back(vals[i], vals[i + 1], vals[i + 2]);
        trace.push_back(std::move(frame));
    }
    return trace;
}

void write_envelope_csv(const EnvelopeResult& r, const std::string& path) {
    auto f = open_out(path);
    f.precision(12);
    f << "n,s_over_sstar,f_measured,f_analytic\n";
    for (const auto& s : r.samples)
        f << r.n << "," << s.s_over_sstar << "," << s.f_measured << ","
          << s.f_analytic << "\n";
}

void write_buckling_summary_csv(const std::vector<EnvelopeResult>& rs,
                                const std::string& path) {
    auto f = open_out(path);
    f.precision(12);
    f << "n,avg_error,phi0\n";
    for (const auto& r : rs)
        f << r.n << "," << r.avg_error << "," << r.phi0 << "\n";
}

void write_michell_csv(const std::vector<MichellResult>& rs, const std::string& path) {
    auto f = open_out(path);
    f.precision(12);
    f << "beta_over_alpha,theta_measured,theta_analytic,deviation_pct\n";
    for (const auto& r : rs)
        f << r.beta_over_alpha << "," << r.theta_c_measured << ","
          << r.theta_c_analytic << "," << r.deviation_pct << "\n";
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
    auto f = open_out(path);
    f.precision(12);
    f << "batch,episodes,mean_reward,std_reward,success_rate\n";
    for (const auto& c : curve)
        f << c.batch << "," << c.episodes_done << "," << c.mean_reward << ","
          << c.std_reward << "," << c.success_rate << "\n";
}

void write_trace_obj(const std::vector<TraceFrame>& trace, const std::string& path) {
    auto f = open_out(path);
    f.precision(12);
    long base = 1;
    for (size_t k = 0; k < trace.size(); ++k) {
        f << "o frame_" << k << "\n";
        for (const Vec3& x : trace[k].nodes)
            f << "v " << x.x() << " " << x.y() << " " << x.z() << "\n";
        for (size_t i = 0; i + 1 < trace[k].nodes.size(); ++i)
            f << "l " << base + i << " " << base + i + 1 << "\n";
        base += static_cast<long>(trace[k].nodes.size());
    }
}

void append_jsonl(const json& j, const std::string& path) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw ConfigError("cannot append to " + path);
    f << j.dump() << "\n";
}

void write_manifest(const RunManifest& m, const std::string& path) {
    const json j{{"command", m.command},     {"config", m.config},
                 {"seed", m.seed},           {"code_version", m.code_version},
                 {"outputs", m.outputs},     {"wall_seconds", m.wall_seconds}};
    const std::string tmp = path + ".tmp";
    save_json(j, tmp);
    std::filesystem::rename(tmp, path);
}

}  // namespace wiresim::io
