#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sspo/advantage.hpp"
#include "sspo/checkpoint.hpp"
#include "sspo/config.hpp"
#include "sspo/metrics.hpp"
#include "sspo/policy.hpp"
#include "sspo/rollout.hpp"
#include "sspo/taskgen.hpp"
#include "sspo/trace.hpp"
#include "sspo/vvp.hpp"

namespace sspo {

struct GroupRollout {
    Trace trace;
    double entropy_sum = 0.0;
};

// n rollouts for one query, each from its own stream derived from
// (base seed, query id, rollout index), then segmented and verified.
inline std::vector<GroupRollout> run_group_ex(const PolicyParams& params, const Vocabulary& vocab,
                                              const Query& query, std::uint64_t query_uid,
                                              const TrainConfig& config) {
    std::vector<GroupRollout> group;
    group.reserve(static_cast<std::size_t>(config.group_size));
    for (int j = 0; j < config.group_size; ++j) {
        Rng rng(derive_seed(config.seed, seed_tag::rollout, query_uid, j));
        const Rollout r = sample_response(params, vocab, query.tokens, config.limits(), rng);
        GroupRollout out;
        out.trace = segment_response(vocab, query, r.tokens, r.logprobs, r.truncated);
        out.entropy_sum = r.entropy_sum;
        group.push_back(std::move(out));
    }
    return group;
}

inline std::vector<Trace> run_group(const PolicyParams& params, const Vocabulary& vocab,
                                    const Query& query, std::uint64_t query_uid,
                                    const TrainConfig& config) {
    std::vector<Trace> traces;
    for (auto& g : run_group_ex(params, vocab, query, query_uid, config)) {
        traces.push_back(std::move(g.trace));
    }
    return traces;
}

struct EvalResult {
    double accuracy = 0.0;
    double mean_response_length = 0.0;
};

// Greedy decoding per query; accuracy is the mean verified reward and length
// the mean response token count (EOS included). Truncated decodes score 0.
inline EvalResult evaluate(const PolicyParams& params, const Vocabulary& vocab,
                           const std::vector<Query>& queries, const RolloutLimits& limits) {
    if (queries.empty()) throw ConfigError("evaluation manifest is empty");
    EvalResult r;
    for (const Query& q : queries) {
        const Rollout rollout = greedy_response(params, vocab, q.tokens, limits);
        const Trace trace = segment_response(vocab, q, rollout.tokens, rollout.logprobs,
                                             rollout.truncated);
        r.accuracy += trace.reward;
        r.mean_response_length += static_cast<double>(rollout.tokens.size());
    }
    r.accuracy /= static_cast<double>(queries.size());
    r.mean_response_length /= static_cast<double>(queries.size());
    return r;
}

// The held-out task set implied by (config.seed, eval_queries).
inline std::vector<Query> make_eval_manifest(const TrainConfig& config, const Vocabulary& vocab) {
    std::vector<Query> queries;
    queries.reserve(static_cast<std::size_t>(config.eval_queries));
    for (int i = 0; i < config.eval_queries; ++i) {
        queries.push_back(
            gen_query(config.task, vocab, derive_seed(config.seed, seed_tag::eval, i)));
    }
    return queries;
}

struct TrainResult {
    PolicyParams params;
    Vocabulary vocab;
    std::vector<MetricsRecord> metrics;
    EvalResult final_eval;
};

namespace detail {

inline std::vector<double> shaped_rewards(const std::vector<GroupRollout>& group,
                                          double length_penalty) {
    std::vector<double> rewards;
    rewards.reserve(group.size());
    for (const auto& g : group) {
        double r = g.trace.reward;
        if (length_penalty != 0.0) {
            r -= length_penalty * static_cast<double>(g.trace.response_tokens.size());
        }
        rewards.push_back(r);
    }
    return rewards;
}

}  // namespace detail

// One full training run: per update, a fresh batch of queries, group
// rollouts, method-specific token advantages, one plain gradient-ascent step.
// Fully deterministic given the config. When out_dir is nonempty, writes
// config.json, tasks_eval.jsonl, metrics.jsonl, checkpoint.sspo, eval.json.
// A non-finite gradient aborts with the last good checkpoint retained.
inline TrainResult train_run(const TrainConfig& config, const std::string& out_dir = "",
                             std::ostream* progress = nullptr) {
    config.validate();
    const Vocabulary vocab = make_task_vocab(config.task);
    PolicyParams params = init_params(vocab, config.policy.context_window,
                                      config.policy.init_scale,
                                      derive_seed(config.seed, seed_tag::params));
    params.temperature = config.sampling.temperature;
    const AdvantageConfig adv_cfg = config.advantage();
    const RolloutLimits limits = config.limits();

    std::ofstream metrics_sink;
    std::string checkpoint_path;
    std::vector<Query> eval_queries = make_eval_manifest(config, vocab);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const auto dir = std::filesystem::path(out_dir);
        {
            std::ofstream cfg_out(dir / "config.json", std::ios::binary);
            if (!cfg_out) throw IoError("cannot write config.json in " + out_dir);
            cfg_out << config_to_json(config).dump(2) << "\n";
        }
        write_task_manifest((dir / "tasks_eval.jsonl").string(), eval_queries);
        metrics_sink.open(dir / "metrics.jsonl", std::ios::binary);
        if (!metrics_sink) throw IoError("cannot open metrics.jsonl in " + out_dir);
        checkpoint_path = (dir / "checkpoint.sspo").string();
    }

    TrainResult result;
    result.vocab = vocab;

    for (int update = 0; update < config.updates; ++update) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::vector<GroupRollout>> groups;
        std::vector<TraceGradInput> grad_batch;
        MetricsRecord rec;
        rec.update = update;
        double reward_sum = 0.0;
        double length_sum = 0.0;
        double entropy_sum = 0.0;
        double token_count = 0.0;
        double u_final_sum = 0.0;
        double prune_sum = 0.0;
        int prune_count = 0;
        int degenerate_groups = 0;
        int rollouts = 0;

        try {
            groups.reserve(static_cast<std::size_t>(config.batch_queries));
            for (int b = 0; b < config.batch_queries; ++b) {
                const Query query = gen_query(config.task, vocab,
                                              derive_seed(config.seed, seed_tag::task, update, b));
                const std::uint64_t uid =
                    static_cast<std::uint64_t>(update) * config.batch_queries + b;
                groups.push_back(run_group_ex(params, vocab, query, uid, config));
            }
            for (const auto& group : groups) {
                const GroupRewards g = normalize_group_rewards(
                    detail::shaped_rewards(group, config.length_penalty), config.epsilon,
                    config.std_mode);
                if (g.degenerate) ++degenerate_groups;
                for (std::size_t j = 0; j < group.size(); ++j) {
                    const Trace& trace = group[j].trace;
                    TraceGradInput input;
                    input.trace = &trace;
                    if (config.method == Method::grpo) {
                        input.token_adv = grpo_token_advantages(g, static_cast<int>(j), trace);
                        u_final_sum += probe_final_value(params, vocab, trace, config.value_mode);
                    } else {
                        const StepValueProfile profile =
                            probe_step_values(params, vocab, trace, config.value_mode);
                        const AdvantageTable table = compute_advantage_table(
                            trace, profile.u, g, static_cast<int>(j), adv_cfg);
                        input.token_adv = table.token_adv;
                        if (table.e_star.has_value()) {
                            prune_sum += *table.e_star;
                            ++prune_count;
                        }
                        u_final_sum += profile.u.back();
                    }
                    reward_sum += trace.reward;
                    length_sum += static_cast<double>(trace.response_tokens.size());
                    entropy_sum += group[j].entropy_sum;
                    token_count += static_cast<double>(trace.response_tokens.size());
                    ++rollouts;
                    grad_batch.push_back(std::move(input));
                }
            }

            const PolicyGradient pg = accumulate_policy_gradient(params, vocab, grad_batch);
            if (!std::isfinite(pg.loss)) throw NumericError("non-finite loss");
            for (double gmag : pg.grad) {
                if (!std::isfinite(gmag)) throw NumericError("non-finite gradient entry");
            }
            for (std::size_t i = 0; i < params.weights.size(); ++i) {
                params.weights[i] += config.learning_rate * pg.grad[i];
            }
        } catch (const NumericError& e) {
            if (!checkpoint_path.empty()) {
                save_checkpoint(checkpoint_path, params, vocab, config, config.seed);
            }
            throw NumericError(std::string(e.what()) + " at update " + std::to_string(update) +
                               "; last good checkpoint retained");
        }

        rec.accuracy = reward_sum / rollouts;
        rec.mean_response_length = length_sum / rollouts;
        rec.mean_token_entropy = token_count > 0.0 ? entropy_sum / token_count : 0.0;
        if (prune_count > 0) rec.mean_prune_index = prune_sum / prune_count;
        rec.mean_u_t_final = u_final_sum / rollouts;
        rec.degenerate_group_fraction =
            static_cast<double>(degenerate_groups) / config.batch_queries;
        rec.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (metrics_sink.is_open()) log_metrics(metrics_sink, rec);
        result.metrics.push_back(rec);
        if (progress && (update % 25 == 0 || update + 1 == config.updates)) {
            *progress << "update " << update + 1 << "/" << config.updates
                      << " acc=" << rec.accuracy << " len=" << rec.mean_response_length
                      << " H=" << rec.mean_token_entropy << " (" << rec.wall_time << "s)\n";
        }
    }

    result.params = params;
    result.final_eval = evaluate(params, vocab, eval_queries, limits);
    if (!out_dir.empty()) {
        save_checkpoint(checkpoint_path, params, vocab, config, config.seed);
        const auto dir = std::filesystem::path(out_dir);
        std::ofstream eval_out(dir / "eval.json", std::ios::binary);
        if (!eval_out) throw IoError("cannot write eval.json in " + out_dir);
        nlohmann::ordered_json j;
        j["accuracy"] = result.final_eval.accuracy;
        j["mean_response_length"] = result.final_eval.mean_response_length;
        eval_out << j.dump(2) << "\n";
    }
    return result;
}

// --- run comparison ---

struct RunSummary {
    std::string path;
    int updates = 0;
    double final_accuracy = 0.0;
    double final_mean_length = 0.0;
};

struct ComparisonReport {
    std::vector<RunSummary> runs;
    // For k >= 1, run 0 against run k: compression 1 - len_0/len_k, and the
    // fraction of aligned updates where run 0's entropy is strictly below.
    std::vector<double> compression_vs_first;
    std::vector<double> entropy_below_fraction;
    int aligned_updates = 0;
    bool length_mismatch = false;
};

inline ComparisonReport compare_runs(const std::vector<std::string>& metrics_paths,
                                     const std::string& out_csv) {
    if (metrics_paths.size() < 2) throw ConfigError("compare needs at least 2 metrics series");
    std::vector<std::vector<MetricsRecord>> series;
    ComparisonReport report;
    std::size_t aligned = std::numeric_limits<std::size_t>::max();
    for (const std::string& path : metrics_paths) {
        series.push_back(read_metrics_series(path));
        if (series.back().empty()) throw IoError("empty metrics series: " + path);
        aligned = std::min(aligned, series.back().size());
    }
    report.aligned_updates = static_cast<int>(aligned);
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (series[k].size() != aligned) report.length_mismatch = true;
        RunSummary s;
        s.path = metrics_paths[k];
        s.updates = static_cast<int>(series[k].size());
        s.final_accuracy = series[k].back().accuracy;
        s.final_mean_length = series[k].back().mean_response_length;
        report.runs.push_back(s);
    }
    for (std::size_t k = 1; k < series.size(); ++k) {
        const double len0 = report.runs[0].final_mean_length;
        const double lenk = report.runs[k].final_mean_length;
        report.compression_vs_first.push_back(lenk != 0.0 ? 1.0 - len0 / lenk : 0.0);
        int below = 0;
        for (std::size_t i = 0; i < aligned; ++i) {
            if (series[0][i].mean_token_entropy < series[k][i].mean_token_entropy) ++below;
        }
        report.entropy_below_fraction.push_back(static_cast<double>(below) /
                                                static_cast<double>(aligned));
    }

    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw IoError("cannot open comparison csv for writing: " + out_csv);
    out.precision(17);
    out << "run,path,updates,final_accuracy,final_mean_length,compression_vs_run0,"
           "entropy_below_fraction_run0\n";
    for (std::size_t k = 0; k < report.runs.size(); ++k) {
        const RunSummary& s = report.runs[k];
        out << k << ',' << s.path << ',' << s.updates << ',' << s.final_accuracy << ','
            << s.final_mean_length << ',';
        if (k >= 1) {
            out << report.compression_vs_first[k - 1] << ','
                << report.entropy_below_fraction[k - 1];
        } else {
            out << ',';
        }
        out << "\n";
    }
    out << "\n";
    out << "update";
    for (std::size_t k = 0; k < series.size(); ++k) out << ",entropy_" << k;
    out << "\n";
    for (std::size_t i = 0; i < aligned; ++i) {
        out << series[0][i].update;
        for (std::size_t k = 0; k < series.size(); ++k) {
            out << ',' << series[k][i].mean_token_entropy;
        }
        out << "\n";
    }
    if (!out) throw IoError("failed writing comparison csv: " + out_csv);
    return report;
}

// --- run report (CSV + SVG line charts) ---

namespace detail {

inline std::string svg_polyline(const std::vector<double>& ys, double x0, double y0, double w,
                                double h, double ymin, double ymax, const char* color) {
    std::string pts;
    const double yspan = ymax > ymin ? ymax - ymin : 1.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double x = x0 + w * (ys.size() > 1 ? static_cast<double>(i) / (ys.size() - 1) : 0.0);
        const double y = y0 + h - h * (ys[i] - ymin) / yspan;
        pts += std::to_string(x) + "," + std::to_string(y) + " ";
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

inline std::string svg_panel(const std::string& title, const std::vector<double>& ys, double x0,
                             double y0, double w, double h, const char* color) {
    double ymin = ys.empty() ? 0.0 : ys[0];
    double ymax = ymin;
    for (double y : ys) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    char buf[64];
    std::string s;
    s += "<rect x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(y0) + "\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) +
         "\" fill=\"none\" stroke=\"#999\"/>\n";
    s += "<text x=\"" + std::to_string(x0 + 4) + "\" y=\"" + std::to_string(y0 - 6) +
         "\" font-size=\"12\" font-family=\"sans-serif\">" + title + "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.4g / %.4g", ymin, ymax);
    s += "<text x=\"" + std::to_string(x0 + w - 120) + "\" y=\"" + std::to_string(y0 - 6) +
         "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#555\">min/max " + buf +
         "</text>\n";
    s += svg_polyline(ys, x0, y0, w, h, ymin, ymax, color);
    return s;
}

}  // namespace detail

// Reads a run directory's metrics series and writes report.csv plus
// report.svg with entropy and response-length trajectories.
inline void write_report(const std::string& run_dir) {
    const auto dir = std::filesystem::path(run_dir);
    const auto series = read_metrics_series((dir / "metrics.jsonl").string());
    if (series.empty()) throw IoError("metrics series in " + run_dir + " is empty");

    std::ofstream csv(dir / "report.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write report.csv in " + run_dir);
    csv.precision(17);
    csv << "update,accuracy,mean_response_length,mean_token_entropy,mean_prune_index,"
           "mean_u_t_final,degenerate_group_fraction\n";
    std::vector<double> entered, lengths;
    for (const MetricsRecord& r : series) {
        csv << r.update << ',' << r.accuracy << ',' << r.mean_response_length << ','
            << r.mean_token_entropy << ',';
        if (r.mean_prune_index.has_value()) csv << *r.mean_prune_index;
        csv << ',' << r.mean_u_t_final << ',' << r.degenerate_group_fraction << "\n";
        entered.push_back(r.mean_token_entropy);
        lengths.push_back(r.mean_response_length);
    }
    if (!csv) throw IoError("failed writing report.csv in " + run_dir);

    std::ofstream svg(dir / "report.svg", std::ios::binary);
    if (!svg) throw IoError("cannot write report.svg in " + run_dir);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\">\n";
    svg << detail::svg_panel("mean token entropy (nats)", entered, 40, 30, 560, 150, "#1f77b4");
    svg << detail::svg_panel("mean response length (tokens)", lengths, 40, 240, 560, 150,
                             "#d62728");
    svg << "</svg>\n";
    if (!svg) throw IoError("failed writing report.svg in " + run_dir);
}

}  // namespace sspo
