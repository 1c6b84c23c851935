#pragma once

// Independent oracles used by the unit and acceptance suites. These stay
// deliberately naive and separate from the library implementation paths
// they check.

#include <cmath>
#include <optional>
#include <vector>

#include "sspo/policy.hpp"
#include "sspo/vocab.hpp"

namespace oracles {

// Plain exp-normalize recomputation of the next-token distribution through
// the dense feature vector, without max subtraction.
inline std::vector<double> naive_next_token_probs(const sspo::PolicyParams& p,
                                                  const sspo::Vocabulary& vocab,
                                                  const std::vector<sspo::TokenId>& ctx) {
    const auto phi = sspo::featurize(ctx, p.context_window, vocab);
    std::vector<double> probs(static_cast<std::size_t>(p.vocab_size), 0.0);
    double z = 0.0;
    for (int a = 0; a < p.vocab_size; ++a) {
        double logit = 0.0;
        for (int f = 0; f < p.feature_dim(); ++f) logit += phi[static_cast<std::size_t>(f)] * p.w(f, a);
        probs[static_cast<std::size_t>(a)] = std::exp(logit / p.temperature);
        z += probs[static_cast<std::size_t>(a)];
    }
    for (double& x : probs) x /= z;
    return probs;
}

// Central finite difference of eval() w.r.t. one weight entry.
template <typename F>
double central_fd(sspo::PolicyParams& params, int f, int v, double h, F&& eval) {
    double& w = params.w(f, v);
    const double orig = w;
    w = orig + h;
    const double hi = eval();
    w = orig - h;
    const double lo = eval();
    w = orig;
    return (hi - lo) / (2.0 * h);
}

// Additive vote into the weight table: context slot `slot` holding `tok`
// pushes the logit of `next` by `weight`. slot == context_window-1 is the
// most recent token. Used to build saturated rule-table policies.
inline void force(sspo::PolicyParams& params, int slot, sspo::TokenId tok, sspo::TokenId next,
                  double weight) {
    params.w(slot * params.vocab_size + tok, next) += weight;
}

// Explicit double sum sum_i (gamma*lambda)^i * delta_{t+i}.
inline std::vector<double> gae_double_sum(const std::vector<double>& deltas, double gamma,
                                          double lambda) {
    std::vector<double> adv(deltas.size(), 0.0);
    for (std::size_t t = 0; t < deltas.size(); ++t) {
        double factor = 1.0;
        for (std::size_t i = t; i < deltas.size(); ++i) {
            adv[t] += factor * deltas[i];
            factor *= gamma * lambda;
        }
    }
    return adv;
}

// Brute-force scan: collect every non-increase index, return the minimum.
inline std::optional<int> brute_prune_index(const std::vector<double>& values, bool strict) {
    std::optional<int> best;
    for (std::size_t e = 1; e < values.size(); ++e) {
        const bool decline = strict ? values[e] < values[e - 1] : values[e] <= values[e - 1];
        if (decline && (!best.has_value() || static_cast<int>(e) < *best)) {
            best = static_cast<int>(e);
        }
    }
    return best;
}

// True iff observed successes lie within 4 binomial standard deviations of
// the expected success probability.
inline bool within_binomial_band(long long successes, long long draws, double p, double sds = 4.0) {
    const double n = static_cast<double>(draws);
    const double sd = std::sqrt(std::max(p * (1.0 - p) / n, 1e-300));
    const double freq = static_cast<double>(successes) / n;
    return std::abs(freq - p) <= sds * sd;
}

}  // namespace oracles
