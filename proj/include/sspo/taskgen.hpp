#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/errors.hpp"
#include "sspo/rng.hpp"
#include "sspo/vocab.hpp"

namespace sspo {

enum class TaskKind { chain_arith, recall };

inline const char* to_string(TaskKind k) {
    return k == TaskKind::chain_arith ? "chain_arith" : "recall";
}

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "chain_arith") return TaskKind::chain_arith;
    if (s == "recall") return TaskKind::recall;
    throw ConfigError("unknown task kind: " + s);
}

// One task instance: question tokens, ground-truth answer tokens (canonical
// decimal, no leading zeros), and the oracle intermediate results.
struct Query {
    std::vector<TokenId> tokens;
    std::vector<TokenId> gt_answer;
    std::vector<std::vector<TokenId>> reference_steps;
    TaskKind kind = TaskKind::chain_arith;
    std::uint64_t seed = 0;
};

// Canonical decimal rendering of a nonnegative integer as digit tokens.
inline std::vector<TokenId> render_number(int value, const Vocabulary& vocab) {
    if (value < 0) throw ConfigError("cannot render negative number");
    std::vector<TokenId> out;
    for (char c : std::to_string(value)) {
        out.push_back(vocab.require(std::string(1, c)));
    }
    return out;
}

// Left-to-right arithmetic chain such as "3 + 4 - 2 =", with every running
// total kept in [0, 99]. reference_steps are the running totals after each
// operation; gt_answer is the final total.
inline Query gen_chain_query(Rng& rng, int num_ops, int operand_lo, int operand_hi,
                             const Vocabulary& vocab, std::uint64_t seed = 0) {
    if (num_ops < 1) throw ConfigError("num_ops must be >= 1");
    if (operand_lo < 0 || operand_hi > 9 || operand_lo > operand_hi) {
        throw ConfigError("operand range must satisfy 0 <= lo <= hi <= 9");
    }
    const TokenId plus = vocab.require("+");
    const TokenId minus = vocab.require("-");
    const TokenId equals = vocab.require("=");

    Query q;
    q.kind = TaskKind::chain_arith;
    q.seed = seed;
    int total = rng.uniform_int(operand_lo, operand_hi);
    q.tokens = render_number(total, vocab);
    for (int k = 0; k < num_ops; ++k) {
        bool accepted = false;
        for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
            const bool subtract = rng.uniform_int(0, 1) == 1;
            const int operand = rng.uniform_int(operand_lo, operand_hi);
            const int next = subtract ? total - operand : total + operand;
            if (next < 0 || next > 99) continue;
            q.tokens.push_back(subtract ? minus : plus);
            const auto digits = render_number(operand, vocab);
            q.tokens.insert(q.tokens.end(), digits.begin(), digits.end());
            total = next;
            accepted = true;
        }
        if (!accepted) throw ConfigError("chain query generation infeasible after 100 attempts");
        q.reference_steps.push_back(render_number(total, vocab));
    }
    q.tokens.push_back(equals);
    q.gt_answer = render_number(total, vocab);
    return q;
}

// The fixed key->digit table a recall task is defined by. Deterministic in
// table_size alone, so every query against the same table size agrees.
inline std::vector<int> recall_table(int table_size) {
    if (table_size < 2) throw ConfigError("recall table_size must be >= 2");
    std::vector<int> table(static_cast<std::size_t>(table_size));
    for (int i = 0; i < table_size; ++i) {
        table[static_cast<std::size_t>(i)] =
            static_cast<int>(splitmix64(derive_seed(0x7ab1e, table_size, i)) % 10);
    }
    return table;
}

// One-hop recall: query "K<i> =", answer is the table digit for that key.
// The ideal response has zero reasoning steps.
inline Query gen_recall_query(Rng& rng, int table_size, const Vocabulary& vocab,
                              std::uint64_t seed = 0) {
    const auto table = recall_table(table_size);
    const int key = rng.uniform_int(1, table_size);
    Query q;
    q.kind = TaskKind::recall;
    q.seed = seed;
    q.tokens = {vocab.require("K" + std::to_string(key)), vocab.require("=")};
    q.gt_answer = render_number(table[static_cast<std::size_t>(key - 1)], vocab);
    return q;
}

// 1 iff the answer equals the ground truth token-for-token. No normalization:
// a leading zero or any extra token is a mismatch.
inline int verify_answer(const std::vector<TokenId>& answer, const Query& query) {
    return answer == query.gt_answer ? 1 : 0;
}

// --- manifest serialization (JSONL, one query per line) ---

inline nlohmann::ordered_json query_to_json(const Query& q) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(q.kind);
    j["seed"] = q.seed;
    j["q"] = q.tokens;
    j["y"] = q.gt_answer;
    j["ref_steps"] = q.reference_steps;
    return j;
}

inline Query query_from_json(const nlohmann::json& j) {
    Query q;
    q.kind = task_kind_from_string(j.at("kind").get<std::string>());
    q.seed = j.at("seed").get<std::uint64_t>();
    q.tokens = j.at("q").get<std::vector<TokenId>>();
    q.gt_answer = j.at("y").get<std::vector<TokenId>>();
    q.reference_steps = j.at("ref_steps").get<std::vector<std::vector<TokenId>>>();
    return q;
}

inline void write_task_manifest(const std::string& path, const std::vector<Query>& queries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open task manifest for writing: " + path);
    for (const Query& q : queries) {
        out << query_to_json(q).dump() << "\n";
    }
    if (!out) throw IoError("failed writing task manifest: " + path);
}

inline std::vector<Query> read_task_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open task manifest: " + path);
    std::vector<Query> queries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            queries.push_back(query_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed manifest line in " + path + ": " + e.what());
        }
    }
    return queries;
}

}  // namespace sspo
