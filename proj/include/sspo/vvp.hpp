#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/advantage.hpp"
#include "sspo/errors.hpp"
#include "sspo/policy.hpp"
#include "sspo/rollout.hpp"
#include "sspo/trace.hpp"

namespace sspo {

// How the probability of a multi-token ground truth is folded into u_t.
enum class ValueMode { joint, geometric_mean, first_token };

inline const char* to_string(ValueMode m) {
    switch (m) {
        case ValueMode::joint: return "joint";
        case ValueMode::geometric_mean: return "geometric_mean";
        default: return "first_token";
    }
}

// Step-wise value estimates for one trace. u_t is the policy's own
// probability of the ground-truth answer after [q, s_1..s_t, s_c]; index 0
// is the zero-step (direct inference) probe. v_hat is filled by the
// advantage pipeline, not by probing.
struct StepValueProfile {
    std::vector<double> u;
    std::vector<double> v_hat;
    std::vector<double> central_diffs;
    std::optional<double> avg_diff;
    std::optional<int> e_star;
};

struct CentralDiffs {
    std::vector<double> d;
    std::optional<double> avg;
};

// Interior d_t = (u_{t+1} - u_{t-1}) / 2, one-sided at both ends. Undefined
// (empty, no average) for fewer than two values.
inline CentralDiffs first_central_differences(const std::vector<double>& u) {
    CentralDiffs out;
    const std::size_t n = u.size();
    if (n < 2) return out;
    out.d.resize(n);
    out.d[0] = u[1] - u[0];
    for (std::size_t t = 1; t + 1 < n; ++t) {
        out.d[t] = (u[t + 1] - u[t - 1]) / 2.0;
    }
    out.d[n - 1] = u[n - 1] - u[n - 2];
    double sum = 0.0;
    for (double x : out.d) sum += x;
    out.avg = sum / static_cast<double>(n);
    return out;
}

// One prefill evaluation: probability of the ground-truth tokens after the
// probe prefix for step t, EOS excluded. A -infinity log-probability maps
// to a value of 0.
inline double probe_value_at(const PolicyParams& params, const Vocabulary& vocab,
                             const Trace& trace, int t, ValueMode mode = ValueMode::joint) {
    if (trace.gt_answer.empty()) throw ConfigError("trace has no ground-truth answer to probe");
    const auto prefix = assemble_probe_prefix(vocab, trace, t);
    double logp = 0.0;
    switch (mode) {
        case ValueMode::joint:
            logp = sequence_logprob(params, vocab, prefix, trace.gt_answer);
            break;
        case ValueMode::geometric_mean:
            logp = sequence_logprob(params, vocab, prefix, trace.gt_answer) /
                   static_cast<double>(trace.gt_answer.size());
            break;
        case ValueMode::first_token:
            logp = sequence_logprob(params, vocab, prefix, {trace.gt_answer.front()});
            break;
    }
    return std::exp(logp);
}

// u_T alone, the value at the last reasoning step.
inline double probe_final_value(const PolicyParams& params, const Vocabulary& vocab,
                                const Trace& trace, ValueMode mode = ValueMode::joint) {
    return probe_value_at(params, vocab, trace, trace.num_steps(), mode);
}

// u_t for t in [0, T]: exactly T+1 prefill evaluations; params are never
// mutated. Index 0 is the zero-step (direct inference) probe.
inline StepValueProfile probe_step_values(const PolicyParams& params, const Vocabulary& vocab,
                                          const Trace& trace,
                                          ValueMode mode = ValueMode::joint) {
    StepValueProfile profile;
    const int n_steps = trace.num_steps();
    profile.u.reserve(static_cast<std::size_t>(n_steps) + 1);
    for (int t = 0; t <= n_steps; ++t) {
        profile.u.push_back(probe_value_at(params, vocab, trace, t, mode));
    }
    const CentralDiffs diffs = first_central_differences(profile.u);
    profile.central_diffs = diffs.d;
    profile.avg_diff = diffs.avg;
    profile.e_star = prune_index(profile.u);
    return profile;
}

enum class QueryLabel { poisonous, beneficial, both_correct, both_wrong };

inline const char* to_string(QueryLabel l) {
    switch (l) {
        case QueryLabel::poisonous: return "poisonous";
        case QueryLabel::beneficial: return "beneficial";
        case QueryLabel::both_correct: return "both_correct";
        default: return "both_wrong";
    }
}

struct QueryClass {
    QueryLabel label = QueryLabel::both_wrong;
    int direct_correct = 0;
    int cot_correct = 0;
    bool cot_truncated = false;
};

// Labels a query by whether greedy direct inference and greedy CoT reasoning
// reach the ground truth. Greedy decoding makes the call deterministic; the
// rng argument is accepted for signature symmetry and never consulted.
inline QueryClass classify_query(const PolicyParams& params, const Vocabulary& vocab,
                                 const Query& query, Rng& /*rng*/, int cot_max_len,
                                 const RolloutLimits& caps = RolloutLimits{}) {
    QueryClass result;

    RolloutLimits direct_caps = caps;
    direct_caps.max_len = caps.max_tokens_per_step + 1;  // answer tokens + EOS
    const Rollout direct =
        greedy_direct_answer(params, vocab, assemble_probe_prefix(vocab, query), direct_caps);
    std::vector<TokenId> direct_answer = direct.tokens;
    if (!direct_answer.empty() && direct_answer.back() == vocab.eos()) direct_answer.pop_back();
    result.direct_correct = direct.truncated ? 0 : verify_answer(direct_answer, query);

    RolloutLimits cot_caps = caps;
    cot_caps.max_len = cot_max_len;
    const Rollout cot = greedy_response(params, vocab, query.tokens, cot_caps);
    result.cot_truncated = cot.truncated;
    if (cot.truncated) {
        result.cot_correct = 0;
    } else {
        const Trace trace = segment_response(vocab, query, cot.tokens, cot.logprobs);
        result.cot_correct = trace.reward;
    }

    if (result.direct_correct && !result.cot_correct) {
        result.label = QueryLabel::poisonous;
    } else if (!result.direct_correct && result.cot_correct) {
        result.label = QueryLabel::beneficial;
    } else if (result.direct_correct) {
        result.label = QueryLabel::both_correct;
    } else {
        result.label = QueryLabel::both_wrong;
    }
    return result;
}

struct DistributionSummary {
    std::string label;
    int count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

// Numeric reduction of a violin plot: count, mean, population std, min,
// linearly interpolated quartiles, max.
inline DistributionSummary summarize_distribution(const std::vector<double>& values,
                                                  const std::string& label) {
    if (values.empty()) throw ConfigError("cannot summarize an empty distribution");
    DistributionSummary s;
    s.label = label;
    s.count = static_cast<int>(values.size());
    double sum = 0.0;
    for (double x : values) sum += x;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double x : values) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&sorted](double q) {
        const double h = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    };
    s.min = sorted.front();
    s.q25 = quantile(0.25);
    s.median = quantile(0.5);
    s.q75 = quantile(0.75);
    s.max = sorted.back();
    return s;
}

// --- profile serialization (JSONL) ---

inline nlohmann::ordered_json profile_to_json(const StepValueProfile& p, int query_idx = 0,
                                              int rollout = 0) {
    nlohmann::ordered_json j;
    j["query_idx"] = query_idx;
    j["rollout"] = rollout;
    j["u"] = p.u;
    j["v_hat"] = p.v_hat;
    j["d"] = p.central_diffs;
    if (p.avg_diff.has_value()) {
        j["avg_diff"] = *p.avg_diff;
    } else {
        j["avg_diff"] = nullptr;
    }
    if (p.e_star.has_value()) {
        j["e_star"] = *p.e_star;
    } else {
        j["e_star"] = nullptr;
    }
    return j;
}

inline StepValueProfile profile_from_json(const nlohmann::json& j, int* query_idx = nullptr,
                                          int* rollout = nullptr) {
    StepValueProfile p;
    if (query_idx) *query_idx = j.at("query_idx").get<int>();
    if (rollout) *rollout = j.at("rollout").get<int>();
    p.u = j.at("u").get<std::vector<double>>();
    p.v_hat = j.at("v_hat").get<std::vector<double>>();
    p.central_diffs = j.at("d").get<std::vector<double>>();
    if (!j.at("avg_diff").is_null()) p.avg_diff = j.at("avg_diff").get<double>();
    if (!j.at("e_star").is_null()) p.e_star = j.at("e_star").get<int>();
    return p;
}

inline void write_summary_csv(const std::string& path,
                              const std::vector<DistributionSummary>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open summary csv for writing: " + path);
    out << "class,count,mean,std,min,q25,median,q75,max\n";
    out.precision(17);
    for (const auto& s : rows) {
        out << s.label << ',' << s.count << ',' << s.mean << ',' << s.stddev << ',' << s.min << ','
            << s.q25 << ',' << s.median << ',' << s.q75 << ',' << s.max << "\n";
    }
    if (!out) throw IoError("failed writing summary csv: " + path);
}

}  // namespace sspo
