#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/config.hpp"
#include "sspo/errors.hpp"
#include "sspo/policy.hpp"
#include "sspo/vocab.hpp"

namespace sspo {

// Checkpoint container layout:
//   bytes 0..4   magic "SSPO1"
//   u64 LE       metadata byte length
//   metadata     UTF-8 JSON: format_version, vocab token list, config,
//                creation seed, matrix shape, temperature
//   payload      F*V doubles, little-endian, row-major
// Loading reproduces the parameter matrix bit-exactly.

constexpr char checkpoint_magic[5] = {'S', 'S', 'P', 'O', '1'};
constexpr int checkpoint_format_version = 1;

struct Checkpoint {
    PolicyParams params;
    Vocabulary vocab;
    TrainConfig config;
    std::uint64_t creation_seed = 0;
};

namespace detail {

inline void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("corrupt checkpoint: truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64_le(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64_le(out, bits);
}

inline double get_f64_le(std::istream& in) {
    const std::uint64_t bits = get_u64_le(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const PolicyParams& params,
                            const Vocabulary& vocab, const TrainConfig& config,
                            std::uint64_t creation_seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    nlohmann::ordered_json meta;
    meta["format_version"] = checkpoint_format_version;
    meta["vocab"] = vocab.tokens();
    meta["config"] = config_to_json(config);
    meta["creation_seed"] = creation_seed;
    meta["vocab_size"] = params.vocab_size;
    meta["context_window"] = params.context_window;
    meta["feature_dim"] = params.feature_dim();
    meta["temperature"] = params.temperature;
    const std::string meta_str = meta.dump();

    out.write(checkpoint_magic, sizeof(checkpoint_magic));
    detail::put_u64_le(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (double w : params.weights) detail::put_f64_le(out, w);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[sizeof(checkpoint_magic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, checkpoint_magic, sizeof(magic)) != 0) {
        throw IoError("corrupt checkpoint: bad magic");
    }
    const std::uint64_t meta_len = detail::get_u64_le(in);
    if (meta_len > (1ULL << 30)) throw IoError("corrupt checkpoint: absurd metadata length");
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw IoError("corrupt checkpoint: truncated metadata");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("corrupt checkpoint: metadata is not JSON: ") + e.what());
    }

    Checkpoint ck;
    if (meta.value("format_version", -1) != checkpoint_format_version) {
        throw IoError("corrupt checkpoint: unsupported format version");
    }
    try {
        ck.vocab = Vocabulary(meta.at("vocab").get<std::vector<std::string>>());
        ck.config = config_from_json(meta.at("config"));
        ck.creation_seed = meta.at("creation_seed").get<std::uint64_t>();
        ck.params.vocab_size = meta.at("vocab_size").get<int>();
        ck.params.context_window = meta.at("context_window").get<int>();
        ck.params.temperature = meta.at("temperature").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("corrupt checkpoint: incomplete metadata: ") + e.what());
    }
    if (ck.params.vocab_size != ck.vocab.size()) {
        throw IoError("corrupt checkpoint: vocab size does not match matrix shape");
    }
    const int feature_dim = meta.at("feature_dim").get<int>();
    if (feature_dim != ck.params.feature_dim()) {
        throw IoError("corrupt checkpoint: feature_dim does not match K*V+1");
    }

    const std::size_t count =
        static_cast<std::size_t>(feature_dim) * static_cast<std::size_t>(ck.params.vocab_size);
    ck.params.weights.resize(count);
    for (std::size_t i = 0; i < count; ++i) ck.params.weights[i] = detail::get_f64_le(in);
    if (!in) throw IoError("corrupt checkpoint: truncated parameter matrix");
    char extra;
    if (in.read(&extra, 1)) throw IoError("corrupt checkpoint: trailing bytes");
    return ck;
}

}  // namespace sspo
