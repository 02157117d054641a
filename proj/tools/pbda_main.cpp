#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbda/checks.hpp"
#include "pbda/experiment.hpp"
#include "pbda/tasks.hpp"

namespace fs = std::filesystem;
using namespace pbda;

namespace {

std::vector<double> parse_shares(const std::string& text, std::size_t num_classes) {
    if (text == "twelfths") {
        std::vector<double> v;
        for (std::size_t c = 0; c < num_classes; ++c) v.push_back(static_cast<double>(c + 1) / 12.0);
        return v;
    }
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    if (v.size() != num_classes) {
        throw std::invalid_argument("--shares needs one value per class (" + std::to_string(num_classes) + ")");
    }
    return v;
}

void report_task(const TaskInstance& task, const fs::path& manifest) {
    std::printf("wrote %s\n  source %zu rows, target %zu rows, beta_inf %.6g\n", manifest.string().c_str(),
                task.source.size(), task.target_x.size(), task.beta_inf);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PAC-Bayes domain adaptation bounds for stochastic neural networks"};
    app.require_subcommand(1);

    // make-task
    auto* make = app.add_subcommand("make-task", "Build a covariate-shift task (manifest + CSVs)");
    make->require_subcommand(1);
    fs::path out_dir;
    std::uint64_t task_seed = 0;

    auto* synth = make->add_subcommand("synthetic", "Two-domain Gaussian mixture with exact density ratio");
    std::string spec_path;
    std::size_t n_source = 0, n_target = 0, n_oracle = 0;
    synth->add_option("--spec", spec_path, "SyntheticSpec JSON (default: built-in 2-D task)")->check(CLI::ExistingFile);
    synth->add_option("--n-source", n_source, "override source sample size");
    synth->add_option("--n-target", n_target, "override target sample size");
    synth->add_option("--n-oracle", n_oracle, "separate labeled target sample size (0: reuse target)");
    synth->add_option("--seed", task_seed, "sampling seed");
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* mix = make->add_subcommand("mixture", "Class-dependent mix of two labeled pools");
    fs::path pool0, pool1;
    std::size_t num_classes = 10;
    int threshold = -1;
    std::string shares = "twelfths";
    mix->add_option("--pool0", pool0, "dataset CSV of origin 0")->required()->check(CLI::ExistingFile);
    mix->add_option("--pool1", pool1, "dataset CSV of origin 1")->required()->check(CLI::ExistingFile);
    mix->add_option("--num-classes", num_classes, "number of classes in the pools");
    mix->add_option("--threshold", threshold, "class < threshold becomes label 0 (default: num_classes / 2)");
    mix->add_option("--shares", shares, "'twelfths' or comma-separated source share of origin 1 per class");
    mix->add_option("--seed", task_seed, "split seed");
    mix->add_option("--out", out_dir, "output directory")->required();

    auto* one = make->add_subcommand("one-sided", "Shared pool partly moved into a source-only pool");
    fs::path source_only, shared;
    double move_fraction = 0.2;
    one->add_option("--source-only", source_only, "dataset CSV seen only in the source")->required()->check(CLI::ExistingFile);
    one->add_option("--shared", shared, "dataset CSV of the target population")->required()->check(CLI::ExistingFile);
    one->add_option("--move-fraction", move_fraction, "fraction of the shared pool moved to the source");
    one->add_option("--seed", task_seed, "split seed");
    one->add_option("--out", out_dir, "output directory")->required();

    // run
    auto* run = app.add_subcommand("run", "Run an experiment config and write report files");
    fs::path config_path, csv_out, json_out;
    run->add_option("config", config_path, "experiment config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--csv", csv_out, "report CSV path (overrides the config)");
    run->add_option("--json", json_out, "report JSON path (overrides the config)");

    // summarize
    auto* summarize = app.add_subcommand("summarize", "Per seed/alpha/bound minimum over checkpoints");
    fs::path report_path;
    summarize->add_option("report", report_path, "report CSV")->required()->check(CLI::ExistingFile);

    // check
    auto* check = app.add_subcommand("check", "Run the acceptance checks (tiny sizes unless --full)");
    bool full = false;
    std::vector<int> only;
    check->add_flag("--full", full, "use the full acceptance sizes (several minutes)");
    check->add_option("--only", only, "run only these check ids")->check(CLI::Range(1, checks::check_count()));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*make) {
            TaskInstance task;
            if (*synth) {
                SyntheticSpec spec = SyntheticSpec::default_2d();
                if (!spec_path.empty()) {
                    std::ifstream in(spec_path);
                    spec = synthetic_spec_from_json(nlohmann::json::parse(in));
                }
                if (n_source) spec.n_source = n_source;
                if (n_target) spec.n_target = n_target;
                if (synth->count("--n-oracle")) spec.n_oracle = n_oracle;
                if (synth->count("--seed")) spec.seed = task_seed;
                task = build_synthetic_task(spec);
            } else if (*mix) {
                const LabeledSample p0 = load_dataset(pool0, num_classes);
                const LabeledSample p1 = load_dataset(pool1, num_classes);
                const int thr = threshold >= 0 ? threshold : static_cast<int>(num_classes / 2);
                const MixtureTaskSpec spec = mixture_spec_for_pools(p0, p1, parse_shares(shares, num_classes), thr);
                task = build_mixture_task(p0, p1, spec, task_seed);
            } else {
                task = build_one_sided_task(load_dataset(source_only), load_dataset(shared), move_fraction, task_seed);
            }
            report_task(task, write_task(out_dir, task));
        } else if (*run) {
            ExperimentConfig cfg = load_config(config_path);
            if (!csv_out.empty()) cfg.output_csv = csv_out;
            if (!json_out.empty()) cfg.output_json = json_out;
            if (!cfg.output_csv && !cfg.output_json) cfg.output_csv = config_path.parent_path() / "report.csv";
            const RunReport report = run_experiment(cfg);
            if (cfg.output_csv) {
                emit(report, ReportFormat::csv, *cfg.output_csv);
                std::printf("wrote %s\n", cfg.output_csv->string().c_str());
            }
            if (cfg.output_json) {
                emit(report, ReportFormat::json, *cfg.output_json);
                std::printf("wrote %s\n", cfg.output_json->string().c_str());
            }
        } else if (*summarize) {
            std::ifstream in(report_path);
            print_summary(std::cout, report_summary(read_report_csv(in)));
        } else if (*check) {
            if (only.empty()) {
                for (int i = 1; i <= checks::check_count(); ++i) only.push_back(i);
            }
            int failed = 0;
            for (int id : only) {
                const auto r = checks::run_check(id, full ? checks::Profile::full : checks::Profile::tiny);
                std::puts(checks::format_result(r).c_str());
                std::fflush(stdout);
                if (!r.passed) ++failed;
            }
            std::printf("%zu checks, %d failed\n", only.size(), failed);
            return failed == 0 ? 0 : 1;
        }
    } catch (const OracleRefusal& e) {
        std::fprintf(stderr, "pbda: refused: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pbda: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
