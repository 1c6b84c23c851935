#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/errors.hpp"

namespace sspo {

// One training-update record. wall_time is carried in memory and printed to
// progress output but never serialized: the metrics JSONL is byte-identical
// across runs with the same config and seed.
struct MetricsRecord {
    int update = 0;
    double accuracy = 0.0;               // mean binary reward over the batch rollouts
    double mean_response_length = 0.0;   // tokens, EOS included
    double mean_token_entropy = 0.0;     // nats, sampling-time distributions
    std::optional<double> mean_prune_index;
    double mean_u_t_final = 0.0;         // mean u_T over the batch rollouts
    double degenerate_group_fraction = 0.0;
    double wall_time = 0.0;              // seconds; not serialized
};

inline nlohmann::ordered_json metrics_to_json(const MetricsRecord& r) {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!std::isfinite(r.accuracy) || !in_unit(r.accuracy)) {
        throw NumericError("metrics accuracy outside [0, 1]");
    }
    if (!std::isfinite(r.degenerate_group_fraction) || !in_unit(r.degenerate_group_fraction)) {
        throw NumericError("metrics degenerate_group_fraction outside [0, 1]");
    }
    if (!std::isfinite(r.mean_response_length) || !std::isfinite(r.mean_token_entropy) ||
        !std::isfinite(r.mean_u_t_final)) {
        throw NumericError("non-finite metrics field");
    }
    if (r.mean_prune_index.has_value() && !std::isfinite(*r.mean_prune_index)) {
        throw NumericError("non-finite mean_prune_index");
    }
    nlohmann::ordered_json j;
    j["update"] = r.update;
    j["accuracy"] = r.accuracy;
    j["mean_response_length"] = r.mean_response_length;
    j["mean_token_entropy"] = r.mean_token_entropy;
    if (r.mean_prune_index.has_value()) {
        j["mean_prune_index"] = *r.mean_prune_index;
    } else {
        j["mean_prune_index"] = nullptr;
    }
    j["mean_u_t_final"] = r.mean_u_t_final;
    j["degenerate_group_fraction"] = r.degenerate_group_fraction;
    return j;
}

inline MetricsRecord metrics_from_json(const nlohmann::json& j) {
    MetricsRecord r;
    r.update = j.at("update").get<int>();
    r.accuracy = j.at("accuracy").get<double>();
    r.mean_response_length = j.at("mean_response_length").get<double>();
    r.mean_token_entropy = j.at("mean_token_entropy").get<double>();
    if (!j.at("mean_prune_index").is_null()) {
        r.mean_prune_index = j.at("mean_prune_index").get<double>();
    }
    r.mean_u_t_final = j.at("mean_u_t_final").get<double>();
    r.degenerate_group_fraction = j.at("degenerate_group_fraction").get<double>();
    return r;
}

// Appends one record as a single JSON line, fields in fixed order. The line
// is assembled first and written with one call, then flushed.
inline void log_metrics(std::ostream& sink, const MetricsRecord& r) {
    const std::string line = metrics_to_json(r).dump() + "\n";
    sink.write(line.data(), static_cast<std::streamsize>(line.size()));
    sink.flush();
    if (!sink) throw IoError("failed appending metrics record");
}

inline std::vector<MetricsRecord> read_metrics_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open metrics series: " + path);
    std::vector<MetricsRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(metrics_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed metrics line in " + path + ": " + e.what());
        }
    }
    return out;
}

}  // namespace sspo
