#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/advantage.hpp"
#include "sspo/errors.hpp"
#include "sspo/trace.hpp"
#include "sspo/vvp.hpp"

namespace sspo {

// Offline advantage computation: reads trace JSONL and step-value-profile
// JSONL (aligned line order, grouped by query_idx), recomputes group
// normalization, pruning, deltas, and the GAE recursion, and writes one
// JSONL line per rollout with per-token advantages and the gradient mask.
inline void write_advantage_sidecar(const std::string& traces_path,
                                    const std::string& profiles_path, const AdvantageConfig& cfg,
                                    const std::string& out_path) {
    std::ifstream traces_in(traces_path, std::ios::binary);
    if (!traces_in) throw IoError("cannot open trace jsonl: " + traces_path);
    std::ifstream profiles_in(profiles_path, std::ios::binary);
    if (!profiles_in) throw IoError("cannot open profile jsonl: " + profiles_path);

    struct Entry {
        Trace trace;
        StepValueProfile profile;
        int query_idx = 0;
        int rollout = 0;
    };
    std::vector<Entry> entries;
    std::string trace_line, profile_line;
    while (std::getline(traces_in, trace_line)) {
        if (trace_line.empty()) continue;
        do {
            if (!std::getline(profiles_in, profile_line)) {
                throw IoError("profile jsonl has fewer lines than trace jsonl");
            }
        } while (profile_line.empty());
        Entry e;
        try {
            int pq = 0, pj = 0;
            e.trace = trace_from_json(nlohmann::json::parse(trace_line), &e.query_idx, &e.rollout);
            e.profile = profile_from_json(nlohmann::json::parse(profile_line), &pq, &pj);
            if (pq != e.query_idx || pj != e.rollout) {
                throw IoError("trace/profile jsonl lines are not aligned");
            }
        } catch (const nlohmann::json::exception& ex) {
            throw IoError(std::string("malformed sidecar input line: ") + ex.what());
        }
        entries.push_back(std::move(e));
    }

    std::map<int, std::vector<std::size_t>> by_query;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        by_query[entries[i].query_idx].push_back(i);
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open advantage sidecar for writing: " + out_path);
    for (const auto& [query_idx, members] : by_query) {
        std::vector<double> rewards;
        for (std::size_t i : members) {
            double r = entries[i].trace.reward;
            if (cfg.length_penalty != 0.0) {
                r -= cfg.length_penalty *
                     static_cast<double>(entries[i].trace.response_tokens.size());
            }
            rewards.push_back(r);
        }
        const GroupRewards g = normalize_group_rewards(rewards, cfg.eps, cfg.std_mode);
        for (std::size_t j = 0; j < members.size(); ++j) {
            const Entry& e = entries[members[j]];
            const AdvantageTable table =
                compute_advantage_table(e.trace, e.profile.u, g, static_cast<int>(j), cfg);
            nlohmann::ordered_json line;
            line["query_idx"] = e.query_idx;
            line["rollout"] = e.rollout;
            line["token_adv"] = table.token_adv;
            line["grad_mask"] = table.grad_mask;
            if (table.e_star.has_value()) {
                line["e_star"] = *table.e_star;
            } else {
                line["e_star"] = nullptr;
            }
            out << line.dump() << "\n";
        }
    }
    if (!out) throw IoError("failed writing advantage sidecar: " + out_path);
}

}  // namespace sspo
