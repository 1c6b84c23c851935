#pragma once

#include <cmath>
#include <vector>

#include "sspo/policy.hpp"
#include "sspo/rng.hpp"
#include "sspo/vocab.hpp"

namespace sspo {

// Structural caps applied while generating a response. A rollout that trips
// a cap stops without EOS and is flagged truncated (reward 0 downstream).
struct RolloutLimits {
    int max_len = 48;
    int max_steps = 8;            // stop at the max_steps-th STEP_SEP, so T <= max_steps
    int max_tokens_per_step = 4;  // content tokens per segment (steps and answer)
};

struct Rollout {
    std::vector<TokenId> tokens;
    std::vector<double> logprobs;
    bool truncated = false;
    double entropy_sum = 0.0;  // sum of sampling-distribution entropies, one per token
};

namespace detail {

// Shared generation loop. greedy=false draws from rng; greedy=true takes the
// lowest-id argmax and never touches rng. concl_seen=true starts the loop in
// the answer segment (direct-inference decoding from [q, s_c]).
inline Rollout generate_response(const PolicyParams& params, const Vocabulary& vocab,
                                 const std::vector<TokenId>& prefix, const RolloutLimits& limits,
                                 Rng* rng, bool greedy, bool concl_seen) {
    Rollout out;
    std::vector<TokenId> context = prefix;
    int seps = 0;
    int segment_len = 0;
    for (int i = 0; i < limits.max_len; ++i) {
        const TokenDist dist = next_token_dist(params, vocab, context);
        const TokenId tok = greedy ? greedy_argmax(dist) : sample_from_dist(dist, rng->next_double());
        out.tokens.push_back(tok);
        out.logprobs.push_back(std::log(dist.probs[static_cast<std::size_t>(tok)]));
        out.entropy_sum += token_entropy(dist);
        context.push_back(tok);
        if (tok == vocab.eos()) return out;
        if (!concl_seen && tok == vocab.concl()) {
            concl_seen = true;
            segment_len = 0;
            continue;
        }
        if (!concl_seen && tok == vocab.step_sep()) {
            segment_len = 0;
            if (++seps >= limits.max_steps) break;
            continue;
        }
        if (++segment_len > limits.max_tokens_per_step) break;
    }
    out.truncated = true;
    return out;
}

}  // namespace detail

inline Rollout sample_response(const PolicyParams& params, const Vocabulary& vocab,
                               const std::vector<TokenId>& prefix, const RolloutLimits& limits,
                               Rng& rng) {
    return detail::generate_response(params, vocab, prefix, limits, &rng, false, false);
}

inline Rollout greedy_response(const PolicyParams& params, const Vocabulary& vocab,
                               const std::vector<TokenId>& prefix, const RolloutLimits& limits) {
    return detail::generate_response(params, vocab, prefix, limits, nullptr, true, false);
}

// Greedy answer continuation from [prefix, s_c]; the answer segment is capped
// at max_tokens_per_step content tokens.
inline Rollout greedy_direct_answer(const PolicyParams& params, const Vocabulary& vocab,
                                    const std::vector<TokenId>& prefix_with_concl,
                                    const RolloutLimits& limits) {
    return detail::generate_response(params, vocab, prefix_with_concl, limits, nullptr, true, true);
}

}  // namespace sspo
