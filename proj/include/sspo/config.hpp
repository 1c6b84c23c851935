#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "json.hpp"
#include "sspo/advantage.hpp"
#include "sspo/errors.hpp"
#include "sspo/rollout.hpp"
#include "sspo/taskgen.hpp"
#include "sspo/vvp.hpp"

namespace sspo {

enum class Method { grpo, sspo };

inline const char* to_string(Method m) { return m == Method::grpo ? "grpo" : "sspo"; }

struct TaskConfig {
    TaskKind kind = TaskKind::chain_arith;
    int num_ops = 2;
    int operand_lo = 0;
    int operand_hi = 9;
    int table_size = 8;  // recall only
};

struct PolicyConfig {
    int context_window = 4;
    double init_scale = 0.01;
};

struct SamplingConfig {
    double temperature = 1.0;
    int max_steps = 8;
    int max_tokens_per_step = 4;
    int max_len = 48;
};

// Full experiment configuration; one JSON document.
struct TrainConfig {
    Method method = Method::sspo;
    int group_size = 16;
    int batch_queries = 32;
    int updates = 300;
    double learning_rate = 0.05;
    double gamma = 1.0;
    double lambda = 0.95;
    RewardMode reward_mode = RewardMode::every_step;
    double epsilon = 1e-8;
    ValueMode value_mode = ValueMode::joint;
    bool pruning = true;
    bool use_strict = false;
    bool alt_gating = false;
    StdMode std_mode = StdMode::population;
    SamplingConfig sampling;
    TaskConfig task;
    PolicyConfig policy;
    std::uint64_t seed = 1;
    double length_penalty = 0.0;
    int eval_queries = 256;

    RolloutLimits limits() const {
        return RolloutLimits{sampling.max_len, sampling.max_steps, sampling.max_tokens_per_step};
    }

    AdvantageConfig advantage() const {
        AdvantageConfig a;
        a.gamma = gamma;
        a.lambda = lambda;
        a.reward_mode = reward_mode;
        a.pruning = pruning;
        a.use_strict = use_strict;
        a.alt_gating = alt_gating;
        a.eps = epsilon;
        a.std_mode = std_mode;
        a.length_penalty = length_penalty;
        return a;
    }

    void validate() const {
        if (group_size < 2) throw ConfigError("group_size must be >= 2");
        if (batch_queries < 1) throw ConfigError("batch_queries must be >= 1");
        if (updates < 0) throw ConfigError("updates must be >= 0");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
        if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
        if (!(sampling.temperature > 0.0)) throw ConfigError("temperature must be positive");
        if (sampling.max_steps < 1) throw ConfigError("max_steps must be >= 1");
        if (sampling.max_tokens_per_step < 1) throw ConfigError("max_tokens_per_step must be >= 1");
        if (sampling.max_len < 1) throw ConfigError("max_len must be >= 1");
        if (task.num_ops < 1) throw ConfigError("num_ops must be >= 1");
        if (task.operand_lo < 0 || task.operand_hi > 9 || task.operand_lo > task.operand_hi) {
            throw ConfigError("operand range must satisfy 0 <= lo <= hi <= 9");
        }
        if (task.table_size < 2) throw ConfigError("table_size must be >= 2");
        if (policy.context_window < 1) throw ConfigError("context_window must be >= 1");
        if (!(policy.init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
        if (!std::isfinite(length_penalty)) throw ConfigError("length_penalty must be finite");
        if (eval_queries < 1) throw ConfigError("eval_queries must be >= 1");
    }
};

namespace detail {

template <typename T>
T enum_from_string(const std::string& s) = delete;

template <>
inline Method enum_from_string<Method>(const std::string& s) {
    if (s == "grpo") return Method::grpo;
    if (s == "sspo") return Method::sspo;
    throw ConfigError("unknown method: " + s);
}

template <>
inline RewardMode enum_from_string<RewardMode>(const std::string& s) {
    if (s == "every_step") return RewardMode::every_step;
    if (s == "terminal") return RewardMode::terminal;
    throw ConfigError("unknown reward_mode: " + s);
}

template <>
inline ValueMode enum_from_string<ValueMode>(const std::string& s) {
    if (s == "joint") return ValueMode::joint;
    if (s == "geometric_mean") return ValueMode::geometric_mean;
    if (s == "first_token") return ValueMode::first_token;
    throw ConfigError("unknown value_mode: " + s);
}

template <>
inline StdMode enum_from_string<StdMode>(const std::string& s) {
    if (s == "population") return StdMode::population;
    if (s == "sample") return StdMode::sample;
    throw ConfigError("unknown std_mode: " + s);
}

// Pulls a key if present; complains about any key left over afterwards.
class StrictReader {
public:
    explicit StrictReader(const nlohmann::json& j, std::string scope)
        : j_(j), scope_(std::move(scope)) {
        if (!j.is_object()) throw ConfigError("config section " + scope_ + " must be an object");
        for (auto it = j.begin(); it != j.end(); ++it) pending_.push_back(it.key());
    }

    template <typename T>
    void get(const char* key, T& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        consume(key);
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("bad type for config key " + scope_ + key);
        }
    }

    template <typename E>
    void get_enum(const char* key, E& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        consume(key);
        if (!it->is_string()) throw ConfigError("config key " + scope_ + key + " must be a string");
        out = enum_from_string<E>(it->get<std::string>());
    }

    const nlohmann::json* section(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        consume(key);
        return &*it;
    }

    void finish() const {
        if (!pending_.empty()) {
            throw ConfigError("unknown config key: " + scope_ + pending_.front());
        }
    }

private:
    void consume(const std::string& key) {
        for (auto it = pending_.begin(); it != pending_.end(); ++it) {
            if (*it == key) {
                pending_.erase(it);
                return;
            }
        }
    }

    const nlohmann::json& j_;
    std::string scope_;
    std::vector<std::string> pending_;
};

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["method"] = to_string(c.method);
    j["group_size"] = c.group_size;
    j["batch_queries"] = c.batch_queries;
    j["updates"] = c.updates;
    j["learning_rate"] = c.learning_rate;
    j["gamma"] = c.gamma;
    j["lambda"] = c.lambda;
    j["reward_mode"] = to_string(c.reward_mode);
    j["epsilon"] = c.epsilon;
    j["value_mode"] = to_string(c.value_mode);
    j["pruning"] = c.pruning;
    j["use_strict"] = c.use_strict;
    j["alt_gating"] = c.alt_gating;
    j["std_mode"] = to_string(c.std_mode);
    j["sampling"] = {{"temperature", c.sampling.temperature},
                     {"max_steps", c.sampling.max_steps},
                     {"max_tokens_per_step", c.sampling.max_tokens_per_step},
                     {"max_len", c.sampling.max_len}};
    j["task"] = {{"kind", to_string(c.task.kind)},
                 {"num_ops", c.task.num_ops},
                 {"operand_lo", c.task.operand_lo},
                 {"operand_hi", c.task.operand_hi},
                 {"table_size", c.task.table_size}};
    j["policy"] = {{"context_window", c.policy.context_window},
                   {"init_scale", c.policy.init_scale}};
    j["seed"] = c.seed;
    j["length_penalty"] = c.length_penalty;
    j["eval_queries"] = c.eval_queries;
    return j;
}

// Parses a config document. Missing keys keep their defaults; unknown keys
// are configuration errors.
inline TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    detail::StrictReader r(j, "");
    r.get_enum("method", c.method);
    r.get("group_size", c.group_size);
    r.get("batch_queries", c.batch_queries);
    r.get("updates", c.updates);
    r.get("learning_rate", c.learning_rate);
    r.get("gamma", c.gamma);
    r.get("lambda", c.lambda);
    r.get_enum("reward_mode", c.reward_mode);
    r.get("epsilon", c.epsilon);
    r.get_enum("value_mode", c.value_mode);
    r.get("pruning", c.pruning);
    r.get("use_strict", c.use_strict);
    r.get("alt_gating", c.alt_gating);
    r.get_enum("std_mode", c.std_mode);
    if (const auto* s = r.section("sampling")) {
        detail::StrictReader rs(*s, "sampling.");
        rs.get("temperature", c.sampling.temperature);
        rs.get("max_steps", c.sampling.max_steps);
        rs.get("max_tokens_per_step", c.sampling.max_tokens_per_step);
        rs.get("max_len", c.sampling.max_len);
        rs.finish();
    }
    if (const auto* s = r.section("task")) {
        detail::StrictReader rt(*s, "task.");
        std::string kind = to_string(c.task.kind);
        rt.get("kind", kind);
        c.task.kind = task_kind_from_string(kind);
        rt.get("num_ops", c.task.num_ops);
        rt.get("operand_lo", c.task.operand_lo);
        rt.get("operand_hi", c.task.operand_hi);
        rt.get("table_size", c.task.table_size);
        rt.finish();
    }
    if (const auto* s = r.section("policy")) {
        detail::StrictReader rp(*s, "policy.");
        rp.get("context_window", c.policy.context_window);
        rp.get("init_scale", c.policy.init_scale);
        rp.finish();
    }
    r.get("seed", c.seed);
    r.get("length_penalty", c.length_penalty);
    r.get("eval_queries", c.eval_queries);
    r.finish();
    c.validate();
    return c;
}

inline TrainConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

// Vocabulary implied by the task.
inline Vocabulary make_task_vocab(const TaskConfig& task) {
    return task.kind == TaskKind::chain_arith ? Vocabulary::chain_arith()
                                              : Vocabulary::recall(task.table_size);
}

inline Query gen_query(const TaskConfig& task, const Vocabulary& vocab, std::uint64_t seed) {
    Rng rng(seed);
    return task.kind == TaskKind::chain_arith
               ? gen_chain_query(rng, task.num_ops, task.operand_lo, task.operand_hi, vocab, seed)
               : gen_recall_query(rng, task.table_size, vocab, seed);
}

}  // namespace sspo
