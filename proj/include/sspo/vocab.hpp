#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sspo/errors.hpp"
#include "sspo/rng.hpp"

namespace sspo {

using TokenId = int;

// Ordered token alphabet with four required special tokens:
// PAD (context padding), STEP_SEP "S" (ends a reasoning step),
// CONCL "A" (introduces the final answer), EOS "." (ends the response).
// PAD is always id 0 so an untrained argmax policy degenerates to PAD.
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        if (tokens_.size() < 4) {
            throw ConfigError("vocabulary needs at least the 4 special tokens");
        }
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
            if (!inserted) {
                throw ConfigError("duplicate vocabulary token: " + tokens_[i]);
            }
        }
        pad_ = require(pad_symbol());
        step_sep_ = require("S");
        concl_ = require("A");
        eos_ = require(".");
    }

    static const char* pad_symbol() { return "_"; }

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& at(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

    TokenId pad() const { return pad_; }
    TokenId step_sep() const { return step_sep_; }
    TokenId concl() const { return concl_; }
    TokenId eos() const { return eos_; }

    TokenId require(const std::string& tok) const {
        auto it = index_.find(tok);
        if (it == index_.end()) {
            throw ConfigError("token not in vocabulary: " + tok);
        }
        return it->second;
    }

    bool valid(TokenId id) const { return id >= 0 && id < size(); }

    std::string render(const std::vector<TokenId>& ids, const char* sep = " ") const {
        std::string out;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i != 0) out += sep;
            out += at(ids[i]);
        }
        return out;
    }

    // Alphabet for chain arithmetic tasks: specials, digits, operators.
    static Vocabulary chain_arith() {
        std::vector<std::string> t = {pad_symbol(), "S", "A", "."};
        for (int d = 0; d <= 9; ++d) t.push_back(std::to_string(d));
        t.push_back("+");
        t.push_back("-");
        t.push_back("=");
        return Vocabulary(std::move(t));
    }

    // Alphabet for key-value recall tasks: specials, digits, "=", K1..Kn.
    static Vocabulary recall(int table_size) {
        if (table_size < 2) throw ConfigError("recall table_size must be >= 2");
        std::vector<std::string> t = {pad_symbol(), "S", "A", "."};
        for (int d = 0; d <= 9; ++d) t.push_back(std::to_string(d));
        t.push_back("=");
        for (int k = 1; k <= table_size; ++k) t.push_back("K" + std::to_string(k));
        return Vocabulary(std::move(t));
    }

    // Specials plus filler symbols, for tests that only need a size.
    static Vocabulary with_size(int v) {
        if (v < 4) throw ConfigError("vocabulary size must be >= 4");
        std::vector<std::string> t = {pad_symbol(), "S", "A", "."};
        for (int i = 4; i < v; ++i) t.push_back("t" + std::to_string(i));
        return Vocabulary(std::move(t));
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    TokenId pad_ = 0, step_sep_ = 0, concl_ = 0, eos_ = 0;
};

}  // namespace sspo
