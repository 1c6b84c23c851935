#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sspo/errors.hpp"
#include "sspo/rng.hpp"
#include "sspo/vocab.hpp"

namespace sspo {

// Next-token categorical distribution over the vocabulary.
struct TokenDist {
    std::vector<double> probs;
};

// Linear-softmax autoregressive policy. Features are the one-hot encodings
// of the last K context tokens (left-padded with PAD) plus a constant bias,
// so F = K*V + 1 and gradients are analytic. Weights are row-major [F x V].
struct PolicyParams {
    int vocab_size = 0;
    int context_window = 0;
    double temperature = 1.0;
    std::vector<double> weights;

    int feature_dim() const { return context_window * vocab_size + 1; }

    double& w(int f, int v) { return weights[static_cast<std::size_t>(f) * vocab_size + v]; }
    double w(int f, int v) const { return weights[static_cast<std::size_t>(f) * vocab_size + v]; }
};

inline PolicyParams init_params(const Vocabulary& vocab, int context_window, double scale,
                                std::uint64_t seed) {
    if (context_window < 1) throw ConfigError("context window must be >= 1");
    if (!(scale >= 0.0)) throw ConfigError("init scale must be >= 0");
    PolicyParams p;
    p.vocab_size = vocab.size();
    p.context_window = context_window;
    p.weights.assign(static_cast<std::size_t>(p.feature_dim()) * p.vocab_size, 0.0);
    if (scale > 0.0) {
        Rng rng(seed);
        for (double& w : p.weights) w = rng.uniform_real(-scale, scale);
    }
    return p;
}

// Indices of the K+1 active features for a context: one per window slot
// (slot K-1 is the most recent token) plus the bias feature K*V.
inline std::vector<int> active_features(const std::vector<TokenId>& context, int context_window,
                                        const Vocabulary& vocab) {
    const int v = vocab.size();
    const int n = static_cast<int>(context.size());
    std::vector<int> active;
    active.reserve(static_cast<std::size_t>(context_window) + 1);
    for (int slot = 0; slot < context_window; ++slot) {
        const int pos = n - context_window + slot;
        const TokenId tok = pos >= 0 ? context[static_cast<std::size_t>(pos)] : vocab.pad();
        if (!vocab.valid(tok)) throw ConfigError("context token out of range");
        active.push_back(slot * v + tok);
    }
    active.push_back(context_window * v);  // bias
    return active;
}

inline std::vector<double> featurize(const std::vector<TokenId>& context, int context_window,
                                     const Vocabulary& vocab) {
    std::vector<double> phi(static_cast<std::size_t>(context_window) * vocab.size() + 1, 0.0);
    for (int f : active_features(context, context_window, vocab)) {
        phi[static_cast<std::size_t>(f)] = 1.0;
    }
    return phi;
}

// softmax(W^T phi / tau), max-subtracted. Pure function of (params, context).
inline TokenDist next_token_dist(const PolicyParams& params, const Vocabulary& vocab,
                                 const std::vector<TokenId>& context) {
    const int v = params.vocab_size;
    std::vector<double> logits(static_cast<std::size_t>(v), 0.0);
    for (int f : active_features(context, params.context_window, vocab)) {
        const double* row = params.weights.data() + static_cast<std::size_t>(f) * v;
        for (int a = 0; a < v; ++a) logits[static_cast<std::size_t>(a)] += row[a];
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double& l : logits) {
        l /= params.temperature;
        if (!std::isfinite(l)) throw NumericError("non-finite logits");
        if (l > max_logit) max_logit = l;
    }
    TokenDist dist;
    dist.probs.resize(static_cast<std::size_t>(v));
    double z = 0.0;
    for (int a = 0; a < v; ++a) {
        const double e = std::exp(logits[static_cast<std::size_t>(a)] - max_logit);
        dist.probs[static_cast<std::size_t>(a)] = e;
        z += e;
    }
    for (double& p : dist.probs) p /= z;
    return dist;
}

inline double token_entropy(const TokenDist& dist) {
    double h = 0.0;
    for (double p : dist.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Inverse-CDF draw; u must be in [0, 1). Walk order is the token id order,
// which fixes the sampled stream bit-for-bit given the stream of u's.
inline TokenId sample_from_dist(const TokenDist& dist, double u) {
    double cum = 0.0;
    TokenId last_positive = 0;
    for (std::size_t a = 0; a < dist.probs.size(); ++a) {
        const double p = dist.probs[a];
        if (p > 0.0) last_positive = static_cast<TokenId>(a);
        cum += p;
        if (u < cum) return static_cast<TokenId>(a);
    }
    return last_positive;  // rounding left cum slightly below 1
}

// Lowest-id argmax, so greedy decoding is deterministic under ties.
inline TokenId greedy_argmax(const TokenDist& dist) {
    TokenId best = 0;
    for (std::size_t a = 1; a < dist.probs.size(); ++a) {
        if (dist.probs[a] > dist.probs[static_cast<std::size_t>(best)]) {
            best = static_cast<TokenId>(a);
        }
    }
    return best;
}

struct SampleResult {
    std::vector<TokenId> tokens;
    std::vector<double> logprobs;
    bool truncated = false;  // max_len reached without EOS
};

// Autoregressive sampling from the prefix until EOS or max_len tokens.
inline SampleResult sample_tokens(const PolicyParams& params, const Vocabulary& vocab,
                                  const std::vector<TokenId>& prefix, int max_len, Rng& rng) {
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    SampleResult out;
    std::vector<TokenId> context = prefix;
    for (int i = 0; i < max_len; ++i) {
        const TokenDist dist = next_token_dist(params, vocab, context);
        const TokenId tok = sample_from_dist(dist, rng.next_double());
        out.tokens.push_back(tok);
        out.logprobs.push_back(std::log(dist.probs[static_cast<std::size_t>(tok)]));
        context.push_back(tok);
        if (tok == vocab.eos()) return out;
    }
    out.truncated = true;
    return out;
}

// Teacher-forced log-probability of target after prefix. A token whose
// probability underflowed to zero yields the -infinity sentinel.
inline double sequence_logprob(const PolicyParams& params, const Vocabulary& vocab,
                               const std::vector<TokenId>& prefix,
                               const std::vector<TokenId>& target) {
    if (target.empty()) throw ConfigError("sequence_logprob target must be nonempty");
    std::vector<TokenId> context = prefix;
    double total = 0.0;
    for (TokenId tok : target) {
        const TokenDist dist = next_token_dist(params, vocab, context);
        total += std::log(dist.probs[static_cast<std::size_t>(tok)]);
        context.push_back(tok);
    }
    return total;
}

// Exact gradient of sequence_logprob w.r.t. W:
//   sum_i phi(prefix + target_<i) (x) (e_{target_i} - pi_i) / tau.
// Returned dense as [F x V] row-major.
inline std::vector<double> grad_logprob(const PolicyParams& params, const Vocabulary& vocab,
                                        const std::vector<TokenId>& prefix,
                                        const std::vector<TokenId>& target) {
    if (target.empty()) throw ConfigError("grad_logprob target must be nonempty");
    const int v = params.vocab_size;
    std::vector<double> grad(params.weights.size(), 0.0);
    std::vector<TokenId> context = prefix;
    for (TokenId tok : target) {
        const TokenDist dist = next_token_dist(params, vocab, context);
        for (int f : active_features(context, params.context_window, vocab)) {
            double* row = grad.data() + static_cast<std::size_t>(f) * v;
            for (int a = 0; a < v; ++a) {
                const double indicator = (a == tok) ? 1.0 : 0.0;
                row[a] += (indicator - dist.probs[static_cast<std::size_t>(a)]) / params.temperature;
            }
        }
        context.push_back(tok);
    }
    return grad;
}

}  // namespace sspo
