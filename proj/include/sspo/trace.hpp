#pragma once

#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/errors.hpp"
#include "sspo/taskgen.hpp"
#include "sspo/vocab.hpp"

namespace sspo {

struct Span {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
};

// One rollout, segmented into reasoning steps, conclusion token, and answer
// span. Immutable after construction.
struct Trace {
    std::vector<TokenId> query_tokens;
    std::vector<TokenId> response_tokens;
    std::vector<TokenId> gt_answer;
    std::vector<Span> step_spans;          // step contents, delimiters excluded
    std::optional<int> concl_index;        // none: malformed (no CONCL emitted)
    Span answer_span{0, 0};
    std::vector<double> token_logprobs;
    int reward = 0;
    bool truncated = false;
    bool has_eos = false;
    bool trailing_sep = false;  // a STEP_SEP immediately precedes CONCL

    int num_steps() const { return static_cast<int>(step_spans.size()); }
    bool malformed() const { return !concl_index.has_value(); }

    std::vector<TokenId> answer_tokens() const {
        return {response_tokens.begin() + answer_span.begin,
                response_tokens.begin() + answer_span.end};
    }
};

// Splits the response on STEP_SEP delimiters before the first CONCL token;
// what follows CONCL (up to a trailing EOS) is the answer span. Zero-length
// steps are dropped. A missing CONCL keeps the trace, flagged, with reward 0.
// A truncated rollout always carries reward 0.
inline Trace segment_response(const Vocabulary& vocab, const Query& query,
                              const std::vector<TokenId>& response,
                              const std::vector<double>& logprobs, bool truncated = false) {
    if (response.empty()) throw ConfigError("cannot segment empty response");
    if (logprobs.size() != response.size()) {
        throw ConfigError("logprobs length must match response length");
    }
    Trace t;
    t.query_tokens = query.tokens;
    t.response_tokens = response;
    t.gt_answer = query.gt_answer;
    t.token_logprobs = logprobs;
    t.truncated = truncated;

    int core_end = static_cast<int>(response.size());
    if (response.back() == vocab.eos()) {
        t.has_eos = true;
        core_end -= 1;
    }

    int concl = -1;
    for (int i = 0; i < core_end; ++i) {
        if (response[static_cast<std::size_t>(i)] == vocab.concl()) {
            concl = i;
            break;
        }
    }

    const int steps_end = concl >= 0 ? concl : core_end;
    int run_begin = 0;
    for (int i = 0; i <= steps_end; ++i) {
        const bool boundary =
            i == steps_end || response[static_cast<std::size_t>(i)] == vocab.step_sep();
        if (!boundary) continue;
        if (i > run_begin) t.step_spans.push_back(Span{run_begin, i});
        run_begin = i + 1;
    }

    if (concl >= 0) {
        t.concl_index = concl;
        t.answer_span = Span{concl + 1, core_end};
        t.trailing_sep = concl > 0 && response[static_cast<std::size_t>(concl - 1)] == vocab.step_sep();
        t.reward = truncated ? 0 : verify_answer(t.answer_tokens(), query);
    } else {
        t.answer_span = Span{core_end, core_end};
        t.reward = 0;
    }
    return t;
}

// Cut points of the T+1 actions over the response: action t < T emits step
// t+1 (plus any delimiters through the next step start); action T emits the
// conclusion, answer, and EOS. Returns T+2 increasing indices.
inline std::vector<int> action_cuts(const Trace& trace) {
    const int n_steps = trace.num_steps();
    const int len = static_cast<int>(trace.response_tokens.size());
    std::vector<int> cuts;
    cuts.reserve(static_cast<std::size_t>(n_steps) + 2);
    cuts.push_back(0);
    for (int t = 1; t < n_steps; ++t) {
        cuts.push_back(trace.step_spans[static_cast<std::size_t>(t)].begin);
    }
    if (n_steps > 0) {
        cuts.push_back(trace.concl_index.value_or(len));
    }
    cuts.push_back(len);
    return cuts;
}

// [q, s_1..s_t, s_c]: query tokens, the response through the start of step
// t+1 (original delimiters kept), then the canonical CONCL token. t = 0 is
// the direct-inference probe [q, s_c].
inline std::vector<TokenId> assemble_probe_prefix(const Vocabulary& vocab, const Trace& trace,
                                                  int t) {
    const int n_steps = trace.num_steps();
    if (t < 0 || t > n_steps) {
        throw std::out_of_range("probe step index out of range");
    }
    const auto cuts = action_cuts(trace);
    std::vector<TokenId> prefix = trace.query_tokens;
    prefix.insert(prefix.end(), trace.response_tokens.begin(),
                  trace.response_tokens.begin() + cuts[static_cast<std::size_t>(t)]);
    prefix.push_back(vocab.concl());
    return prefix;
}

// Zero-step probe straight from a query, for direct-inference probing
// before any rollout exists.
inline std::vector<TokenId> assemble_probe_prefix(const Vocabulary& vocab, const Query& query) {
    std::vector<TokenId> prefix = query.tokens;
    prefix.push_back(vocab.concl());
    return prefix;
}

// Rebuild the response from the segmentation. Exact for well-formed traces
// (CONCL present, no dropped empty steps).
inline std::vector<TokenId> reconstruct_response(const Vocabulary& vocab, const Trace& trace) {
    std::vector<TokenId> out;
    for (std::size_t i = 0; i < trace.step_spans.size(); ++i) {
        if (i != 0) out.push_back(vocab.step_sep());
        const Span& s = trace.step_spans[i];
        out.insert(out.end(), trace.response_tokens.begin() + s.begin,
                   trace.response_tokens.begin() + s.end);
    }
    if (trace.trailing_sep) out.push_back(vocab.step_sep());
    if (trace.concl_index.has_value()) {
        out.push_back(vocab.concl());
        const auto ans = trace.answer_tokens();
        out.insert(out.end(), ans.begin(), ans.end());
    }
    if (trace.has_eos) out.push_back(vocab.eos());
    return out;
}

// --- trace serialization (JSONL) ---

inline nlohmann::ordered_json trace_to_json(const Trace& t, int query_idx = 0, int rollout = 0) {
    nlohmann::ordered_json j;
    j["query_idx"] = query_idx;
    j["rollout"] = rollout;
    j["q"] = t.query_tokens;
    j["resp"] = t.response_tokens;
    j["y"] = t.gt_answer;
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const Span& s : t.step_spans) spans.push_back({s.begin, s.end});
    j["steps"] = spans;
    if (t.concl_index.has_value()) {
        j["concl"] = *t.concl_index;
    } else {
        j["concl"] = nullptr;
    }
    j["answer"] = {t.answer_span.begin, t.answer_span.end};
    // nlohmann renders non-finite doubles as null; that is the on-disk form
    // of the -infinity sentinel.
    j["logp"] = t.token_logprobs;
    j["reward"] = t.reward;
    j["truncated"] = t.truncated;
    j["has_eos"] = t.has_eos;
    j["trailing_sep"] = t.trailing_sep;
    return j;
}

inline Trace trace_from_json(const nlohmann::json& j, int* query_idx = nullptr,
                             int* rollout = nullptr) {
    Trace t;
    if (query_idx) *query_idx = j.at("query_idx").get<int>();
    if (rollout) *rollout = j.at("rollout").get<int>();
    t.query_tokens = j.at("q").get<std::vector<TokenId>>();
    t.response_tokens = j.at("resp").get<std::vector<TokenId>>();
    t.gt_answer = j.at("y").get<std::vector<TokenId>>();
    for (const auto& s : j.at("steps")) {
        t.step_spans.push_back(Span{s.at(0).get<int>(), s.at(1).get<int>()});
    }
    if (!j.at("concl").is_null()) t.concl_index = j.at("concl").get<int>();
    t.answer_span = Span{j.at("answer").at(0).get<int>(), j.at("answer").at(1).get<int>()};
    for (const auto& lp : j.at("logp")) {
        t.token_logprobs.push_back(lp.is_null() ? -std::numeric_limits<double>::infinity()
                                                : lp.get<double>());
    }
    t.reward = j.at("reward").get<int>();
    t.truncated = j.at("truncated").get<bool>();
    t.has_eos = j.at("has_eos").get<bool>();
    t.trailing_sep = j.at("trailing_sep").get<bool>();
    return t;
}

}  // namespace sspo
