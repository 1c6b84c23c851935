// Command-line front end: train / eval / probe / compare / report.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sspo/sspo.hpp"

namespace {

int run_train(const std::string& config_path, const std::string& out_dir) {
    const sspo::TrainConfig config = sspo::load_config(config_path);
    const sspo::TrainResult result = sspo::train_run(config, out_dir, &std::cerr);
    nlohmann::ordered_json summary;
    summary["updates"] = static_cast<int>(result.metrics.size());
    summary["eval_accuracy"] = result.final_eval.accuracy;
    summary["eval_mean_response_length"] = result.final_eval.mean_response_length;
    std::cout << summary.dump(2) << "\n";
    return sspo::exit_ok;
}

int run_eval(const std::string& checkpoint_path, const std::string& tasks_path) {
    const sspo::Checkpoint ck = sspo::load_checkpoint(checkpoint_path);
    const auto queries = sspo::read_task_manifest(tasks_path);
    const sspo::EvalResult r =
        sspo::evaluate(ck.params, ck.vocab, queries, ck.config.limits());
    nlohmann::ordered_json out;
    out["queries"] = static_cast<int>(queries.size());
    out["accuracy"] = r.accuracy;
    out["mean_response_length"] = r.mean_response_length;
    std::cout << out.dump(2) << "\n";
    return sspo::exit_ok;
}

int run_probe(const std::string& checkpoint_path, const std::string& tasks_path,
              const std::string& out_dir) {
    const sspo::Checkpoint ck = sspo::load_checkpoint(checkpoint_path);
    const auto queries = sspo::read_task_manifest(tasks_path);
    sspo::probe_run(ck, queries, out_dir);
    std::cout << "probe outputs written to " << out_dir << "\n";
    return sspo::exit_ok;
}

int run_compare(const std::vector<std::string>& runs, const std::string& out_csv) {
    const sspo::ComparisonReport report = sspo::compare_runs(runs, out_csv);
    if (report.length_mismatch) {
        std::cerr << "warning: metrics series differ in length; aligned on the common prefix of "
                  << report.aligned_updates << " updates\n";
    }
    for (std::size_t k = 1; k < report.runs.size(); ++k) {
        std::cout << "run0 vs run" << k
                  << ": compression=" << report.compression_vs_first[k - 1]
                  << " entropy_below_fraction=" << report.entropy_below_fraction[k - 1] << "\n";
    }
    std::cout << "comparison written to " << out_csv << "\n";
    return sspo::exit_ok;
}

int run_report(const std::string& run_dir) {
    sspo::write_report(run_dir);
    std::cout << "report.csv and report.svg written to " << run_dir << "\n";
    return sspo::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SSPO desk-scale training laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, tasks_path, out_csv, run_dir;
    std::vector<std::string> runs;

    auto* train = app.add_subcommand("train", "train a policy from a JSON config");
    train->add_option("--config", config_path, "TrainConfig JSON document")->required();
    train->add_option("--out", out_dir, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint on a manifest");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--tasks", tasks_path, "task manifest JSONL")->required();

    auto* probe = app.add_subcommand("probe", "step-value probing diagnostics");
    probe->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    probe->add_option("--tasks", tasks_path, "task manifest JSONL")->required();
    probe->add_option("--out", out_dir, "output directory")->required();

    auto* compare = app.add_subcommand("compare", "compare metrics series");
    compare->add_option("--runs", runs, "metrics JSONL paths (first is the run of interest)")
        ->required()
        ->expected(2, -1);
    compare->add_option("--out", out_csv, "comparison CSV path")->required();

    auto* report = app.add_subcommand("report", "emit CSV/SVG trajectories for a run directory");
    report->add_option("--run", run_dir, "run directory containing metrics.jsonl")->required();

    try {
        app.parse(argc, argv);
        if (train->parsed()) return run_train(config_path, out_dir);
        if (eval->parsed()) return run_eval(checkpoint_path, tasks_path);
        if (probe->parsed()) return run_probe(checkpoint_path, tasks_path, out_dir);
        if (compare->parsed()) return run_compare(runs, out_csv);
        if (report->parsed()) return run_report(run_dir);
        return sspo::exit_config;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? sspo::exit_ok : sspo::exit_config;
    } catch (const sspo::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return sspo::exit_config;
    } catch (const sspo::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return sspo::exit_numeric;
    } catch (const sspo::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return sspo::exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sspo::exit_config;
    }
}
