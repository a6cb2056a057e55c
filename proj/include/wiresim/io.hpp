#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wiresim/fling.hpp"
#include "wiresim/policy.hpp"
#include "wiresim/validation.hpp"

namespace wiresim::io {

using json = nlohmann::json;

json load_json(const std::string& path);
void save_json(const json& j, const std::string& path);

FlingScene scene_from_json(const json& j);
json scene_to_json(const FlingScene& fs);

TrainConfig train_config_from_json(const json& j);
json train_config_to_json(const TrainConfig& tc);

BucklingConfig buckling_config_from_json(const json& j);
MichellConfig michell_config_from_json(const json& j);

GaussianPolicy policy_from_json(const json& j);
json policy_to_json(const GaussianPolicy& p);

// CSV helpers. Trace rows are: time, x0, y0, z0, x1, ...
void write_trace_csv(const std::vector<TraceFrame>& trace, const std::string& path);
std::vector<TraceFrame> read_trace_csv(const std::string& path);

void write_envelope_csv(const EnvelopeResult& r, const std::string& path);
void write_buckling_summary_csv(const std::vector<EnvelopeResult>& rs,
                                const std::string& path);
void write_michell_csv(const std::vector<MichellResult>& rs, const std::string& path);
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);

// OBJ polyline sequence: one object per frame, n+1 vertices, n segments.
void write_trace_obj(const std::vector<TraceFrame>& trace, const std::string& path);

void append_jsonl(const json& j, const std::string& path);

// Every command writes one of these next to its outputs, atomically.
struct RunManifest {
    std::string command;
    json config;
    uint64_t seed = 0;
    std::string code_version;
    std::vector<std::string> outputs;
    double wall_seconds = 0;
};

void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace wiresim::io
