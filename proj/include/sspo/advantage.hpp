#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/errors.hpp"
#include "sspo/policy.hpp"
#include "sspo/trace.hpp"

namespace sspo {

enum class RewardMode { every_step, terminal };
enum class StdMode { population, sample };

inline const char* to_string(RewardMode m) {
    return m == RewardMode::every_step ? "every_step" : "terminal";
}
inline const char* to_string(StdMode m) {
    return m == StdMode::population ? "population" : "sample";
}

// Group-relative reward normalization over the n rollouts of one query:
// r_hat_j = (r_j - mean) / (std + eps). A zero-variance group is degenerate
// and yields all-zero r_hat.
struct GroupRewards {
    std::vector<double> rewards;
    double mean = 0.0;
    double stddev = 0.0;
    double eps = 0.0;
    std::vector<double> r_hat;
    bool degenerate = false;
};

inline GroupRewards normalize_group_rewards(const std::vector<double>& rewards, double eps,
                                            StdMode std_mode = StdMode::population) {
    const std::size_t n = rewards.size();
    if (n < 2) throw ConfigError("reward group needs at least 2 rollouts");
    if (!(eps >= 0.0)) throw ConfigError("epsilon must be >= 0");
    GroupRewards g;
    g.rewards = rewards;
    g.eps = eps;
    double sum = 0.0;
    for (double r : rewards) sum += r;
    g.mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double r : rewards) sq += (r - g.mean) * (r - g.mean);
    const double denom =
        std_mode == StdMode::population ? static_cast<double>(n) : static_cast<double>(n - 1);
    g.stddev = std::sqrt(sq / denom);
    g.degenerate = g.stddev == 0.0;
    g.r_hat.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        g.r_hat[j] = g.degenerate ? 0.0 : (rewards[j] - g.mean) / (g.stddev + eps);
    }
    return g;
}

// Step values rescaled by the group reward statistics, with the terminal
// value pinned to zero: v_hat_t = (u_t - mean) / (std + eps) for t in [0, T],
// then v_hat_{T+1} = 0. Degenerate groups center only.
inline std::vector<double> normalize_values(const std::vector<double>& u, const GroupRewards& g) {
    std::vector<double> v;
    v.reserve(u.size() + 1);
    for (double x : u) {
        v.push_back(g.degenerate ? x - g.mean : (x - g.mean) / (g.stddev + g.eps));
    }
    v.push_back(0.0);
    return v;
}

// Minimal step index e >= 1 whose value does not exceed its predecessor
// (strict decline if use_strict). none when the sequence strictly increases.
inline std::optional<int> prune_index(const std::vector<double>& values, bool use_strict = false) {
    for (std::size_t e = 1; e < values.size(); ++e) {
        const bool decline = use_strict ? values[e] < values[e - 1] : values[e] <= values[e - 1];
        if (decline) return static_cast<int>(e);
    }
    return std::nullopt;
}

// Gate for action t (0-based; action t emits step s_{t+1}, action T the
// conclusion/answer). Default keeps steps s_1..s_{e*}; alt_gating keeps one
// action more (the off-by-one reading of the indicator).
inline bool action_gate(int t, std::optional<int> e_star, bool alt_gating = false) {
    if (!e_star.has_value()) return true;
    return alt_gating ? t <= *e_star : t + 1 <= *e_star;
}

inline std::vector<std::uint8_t> make_grad_mask(int n_actions, std::optional<int> e_star,
                                                bool alt_gating = false) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_actions));
    for (int t = 0; t < n_actions; ++t) {
        mask[static_cast<std::size_t>(t)] = action_gate(t, e_star, alt_gating) ? 1 : 0;
    }
    return mask;
}

// Temporal deltas with error-step pruning:
//   delta_t = r_hat_j * rho(t) + gate(t) * (gamma * v_hat_{t+1} - v_hat_t)
// rho is 1 everywhere in every_step mode, 1[t == T] in terminal mode. Gated
// actions degrade to the plain group-relative reward term.
inline std::vector<double> compute_deltas(const GroupRewards& group, int j,
                                          const std::vector<double>& v_hat,
                                          std::optional<int> e_star, double gamma,
                                          RewardMode reward_mode, bool alt_gating = false) {
    if (v_hat.size() < 2) throw ConfigError("v_hat must hold at least [v_0, v_{T+1}]");
    if (j < 0 || static_cast<std::size_t>(j) >= group.r_hat.size()) {
        throw ConfigError("rollout index outside group");
    }
    const int n_actions = static_cast<int>(v_hat.size()) - 1;
    const double r_hat = group.r_hat[static_cast<std::size_t>(j)];
    std::vector<double> deltas(static_cast<std::size_t>(n_actions));
    for (int t = 0; t < n_actions; ++t) {
        const double rho = reward_mode == RewardMode::every_step ? 1.0 : (t == n_actions - 1 ? 1.0 : 0.0);
        double d = r_hat * rho;
        if (action_gate(t, e_star, alt_gating)) {
            d += gamma * v_hat[static_cast<std::size_t>(t) + 1] - v_hat[static_cast<std::size_t>(t)];
        }
        deltas[static_cast<std::size_t>(t)] = d;
    }
    return deltas;
}

// A_t = sum_i (gamma*lambda)^i delta_{t+i}, by the backward recursion
// A_t = delta_t + gamma*lambda * A_{t+1}.
inline std::vector<double> gae_advantages(const std::vector<double>& deltas, double gamma,
                                          double lambda) {
    if (!(gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("gamma and lambda must lie in [0, 1]");
    }
    std::vector<double> adv(deltas.size(), 0.0);
    double carry = 0.0;
    for (std::size_t i = deltas.size(); i-- > 0;) {
        carry = deltas[i] + gamma * lambda * carry;
        adv[i] = carry;
    }
    return adv;
}

// Paints step advantages onto tokens: every token of action t's region gets
// A_t, or 0 where the gradient mask is off.
inline std::vector<double> assign_token_advantages(const Trace& trace,
                                                   const std::vector<double>& advantages,
                                                   const std::vector<std::uint8_t>& grad_mask) {
    const int n_actions = trace.num_steps() + 1;
    if (static_cast<int>(advantages.size()) != n_actions ||
        static_cast<int>(grad_mask.size()) != n_actions) {
        throw ConfigError("advantage/mask length must equal step count + 1");
    }
    const auto cuts = action_cuts(trace);
    std::vector<double> token_adv(trace.response_tokens.size(), 0.0);
    for (int t = 0; t < n_actions; ++t) {
        if (!grad_mask[static_cast<std::size_t>(t)]) continue;
        for (int i = cuts[static_cast<std::size_t>(t)]; i < cuts[static_cast<std::size_t>(t) + 1];
             ++i) {
            token_adv[static_cast<std::size_t>(i)] = advantages[static_cast<std::size_t>(t)];
        }
    }
    return token_adv;
}

// GRPO baseline: the whole sequence is one step, every token gets r_hat_j.
inline std::vector<double> grpo_token_advantages(const GroupRewards& group, int j,
                                                 const Trace& trace) {
    if (j < 0 || static_cast<std::size_t>(j) >= group.r_hat.size()) {
        throw ConfigError("rollout index outside group");
    }
    return std::vector<double>(trace.response_tokens.size(),
                               group.r_hat[static_cast<std::size_t>(j)]);
}

// Per-rollout advantage computation bundle.
struct AdvantageTable {
    std::vector<double> deltas;
    std::vector<double> step_adv;
    std::vector<double> token_adv;
    std::vector<std::uint8_t> grad_mask;
    std::optional<int> e_star;
    double gamma = 1.0;
    double lambda = 0.95;
    RewardMode reward_mode = RewardMode::every_step;
};

struct AdvantageConfig {
    double gamma = 1.0;
    double lambda = 0.95;
    RewardMode reward_mode = RewardMode::every_step;
    bool pruning = true;
    bool use_strict = false;
    bool alt_gating = false;
    double eps = 1e-8;
    StdMode std_mode = StdMode::population;
    double length_penalty = 0.0;
};

// Full SSPO advantage pipeline for one rollout: prune on the raw step values
// (affine-invariant, so equivalent to pruning v_hat), gate the deltas, run
// the GAE recursion, and paint tokens.
inline AdvantageTable compute_advantage_table(const Trace& trace, const std::vector<double>& u,
                                              const GroupRewards& group, int j,
                                              const AdvantageConfig& cfg) {
    if (static_cast<int>(u.size()) != trace.num_steps() + 1) {
        throw ConfigError("step value count must equal step count + 1");
    }
    AdvantageTable table;
    table.gamma = cfg.gamma;
    table.lambda = cfg.lambda;
    table.reward_mode = cfg.reward_mode;
    table.e_star = cfg.pruning ? prune_index(u, cfg.use_strict) : std::nullopt;
    const std::vector<double> v_hat = normalize_values(u, group);
    table.deltas = compute_deltas(group, j, v_hat, table.e_star, cfg.gamma, cfg.reward_mode,
                                  cfg.alt_gating);
    table.step_adv = gae_advantages(table.deltas, cfg.gamma, cfg.lambda);
    table.grad_mask = make_grad_mask(trace.num_steps() + 1, table.e_star, cfg.alt_gating);
    table.token_adv = assign_token_advantages(trace, table.step_adv, table.grad_mask);
    return table;
}

struct TraceGradInput {
    const Trace* trace = nullptr;
    std::vector<double> token_adv;
};

struct PolicyGradient {
    std::vector<double> grad;  // [F x V] row-major
    double loss = 0.0;
};

// Batch policy-gradient accumulation:
//   grad = (1/N) sum over traces, tokens of token_adv * grad log pi(token | prefix)
// with N the rollout count. Zero-advantage tokens are skipped entirely, so a
// masked token's log-probability never enters loss or gradient. Accumulation
// order is trace order then token order, for bit reproducibility.
inline PolicyGradient accumulate_policy_gradient(const PolicyParams& params,
                                                 const Vocabulary& vocab,
                                                 const std::vector<TraceGradInput>& batch) {
    PolicyGradient out;
    out.grad.assign(params.weights.size(), 0.0);
    const int v = params.vocab_size;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Trace& trace = *batch[b].trace;
        const std::vector<double>& adv = batch[b].token_adv;
        if (adv.size() != trace.response_tokens.size()) {
            throw ConfigError("token advantage length must match response length");
        }
        std::vector<TokenId> context = trace.query_tokens;
        for (std::size_t i = 0; i < trace.response_tokens.size(); ++i) {
            const TokenId tok = trace.response_tokens[i];
            const double a = adv[i];
            if (a != 0.0) {
                if (!std::isfinite(a)) {
                    throw NumericError("non-finite token advantage in trace " + std::to_string(b));
                }
                const TokenDist dist = next_token_dist(params, vocab, context);
                const double logp = std::log(dist.probs[static_cast<std::size_t>(tok)]);
                if (!std::isfinite(logp)) {
                    throw NumericError("non-finite log-probability in trace " + std::to_string(b) +
                                       " at token " + std::to_string(i));
                }
                out.loss -= a * logp;
                for (int f : active_features(context, params.context_window, vocab)) {
                    double* row = out.grad.data() + static_cast<std::size_t>(f) * v;
                    for (int c = 0; c < v; ++c) {
                        const double indicator = (c == tok) ? 1.0 : 0.0;
                        row[c] += a * (indicator - dist.probs[static_cast<std::size_t>(c)]) /
                                  params.temperature;
                    }
                }
            }
            context.push_back(tok);
        }
    }
    if (!batch.empty()) {
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        for (double& g : out.grad) g *= inv_n;
        out.loss *= inv_n;
    }
    return out;
}

}  // namespace sspo
