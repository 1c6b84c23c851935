#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/advantage.hpp"
#include "sspo/checkpoint.hpp"
#include "sspo/config.hpp"
#include "sspo/harness.hpp"
#include "sspo/sidecar.hpp"
#include "sspo/vvp.hpp"

namespace sspo {

// Step-value diagnostics over a task manifest. For every query: greedy
// direct/CoT classification, the greedy CoT trace's step-value profile, and
// a sampled rollout group with group-normalized profiles. Writes into out_dir:
//   classes.jsonl        per-query label and per-mode correctness
//   profiles.jsonl       per-query greedy-trace profile (rollout = -1)
//   traces.jsonl         sampled group rollouts
//   group_profiles.jsonl profiles of the sampled rollouts, v_hat filled
//   advantages.jsonl     offline per-token advantages and masks
//   summary.csv          per-class summary of averaged first central diffs
inline void probe_run(const Checkpoint& ck, const std::vector<Query>& queries,
                      const std::string& out_dir) {
    if (queries.empty()) throw ConfigError("probe manifest is empty");
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    const TrainConfig& cfg = ck.config;
    const RolloutLimits limits = cfg.limits();

    std::ofstream classes_out(dir / "classes.jsonl", std::ios::binary);
    std::ofstream profiles_out(dir / "profiles.jsonl", std::ios::binary);
    std::ofstream traces_out(dir / "traces.jsonl", std::ios::binary);
    std::ofstream group_profiles_out(dir / "group_profiles.jsonl", std::ios::binary);
    if (!classes_out || !profiles_out || !traces_out || !group_profiles_out) {
        throw IoError("cannot open probe outputs in " + out_dir);
    }

    std::map<QueryLabel, std::vector<double>> avg_diffs_by_class;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const Query& query = queries[qi];
        Rng unused(0);
        const QueryClass cls =
            classify_query(ck.params, ck.vocab, query, unused, limits.max_len, limits);

        const Rollout greedy = greedy_response(ck.params, ck.vocab, query.tokens, limits);
        const Trace greedy_trace =
            segment_response(ck.vocab, query, greedy.tokens, greedy.logprobs, greedy.truncated);
        const StepValueProfile greedy_profile =
            probe_step_values(ck.params, ck.vocab, greedy_trace, cfg.value_mode);
        profiles_out << profile_to_json(greedy_profile, static_cast<int>(qi), -1).dump() << "\n";
        if (greedy_profile.avg_diff.has_value()) {
            avg_diffs_by_class[cls.label].push_back(*greedy_profile.avg_diff);
        }

        nlohmann::ordered_json cj;
        cj["query_idx"] = qi;
        cj["label"] = to_string(cls.label);
        cj["direct_correct"] = cls.direct_correct;
        cj["cot_correct"] = cls.cot_correct;
        cj["cot_truncated"] = cls.cot_truncated;
        classes_out << cj.dump() << "\n";

        // Sampled group for the offline advantage path.
        std::vector<GroupRollout> group;
        for (int j = 0; j < cfg.group_size; ++j) {
            Rng rng(derive_seed(cfg.seed, seed_tag::probe, qi, j));
            const Rollout r = sample_response(ck.params, ck.vocab, query.tokens, limits, rng);
            GroupRollout gr;
            gr.trace = segment_response(ck.vocab, query, r.tokens, r.logprobs, r.truncated);
            group.push_back(std::move(gr));
        }
        const GroupRewards g = normalize_group_rewards(
            detail::shaped_rewards(group, cfg.length_penalty), cfg.epsilon, cfg.std_mode);
        for (std::size_t j = 0; j < group.size(); ++j) {
            const Trace& trace = group[j].trace;
            StepValueProfile profile =
                probe_step_values(ck.params, ck.vocab, trace, cfg.value_mode);
            profile.v_hat = normalize_values(profile.u, g);
            traces_out << trace_to_json(trace, static_cast<int>(qi), static_cast<int>(j)).dump()
                       << "\n";
            group_profiles_out
                << profile_to_json(profile, static_cast<int>(qi), static_cast<int>(j)).dump()
                << "\n";
        }
    }
    classes_out.flush();
    profiles_out.flush();
    traces_out.flush();
    group_profiles_out.flush();
    if (!classes_out || !profiles_out || !traces_out || !group_profiles_out) {
        throw IoError("failed writing probe outputs in " + out_dir);
    }

    write_advantage_sidecar((dir / "traces.jsonl").string(),
                            (dir / "group_profiles.jsonl").string(), cfg.advantage(),
                            (dir / "advantages.jsonl").string());

    std::vector<DistributionSummary> rows;
    for (const auto& [label, values] : avg_diffs_by_class) {
        rows.push_back(summarize_distribution(values, to_string(label)));
    }
    write_summary_csv((dir / "summary.csv").string(), rows);
}

}  // namespace sspo
