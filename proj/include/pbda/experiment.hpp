#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbda/bounds.hpp"
#include "pbda/nn.hpp"
#include "pbda/risk.hpp"
#include "pbda/tasks.hpp"

namespace pbda {

struct ExperimentConfig {
    // Exactly one task source: a synthetic spec (redrawn for every seed) or a
    // manifest written by `make-task` (fixed across seeds).
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::filesystem::path> task_manifest;

    MlpArchitecture arch{{2, 16, 16, 1}, Activation::relu};
    std::vector<double> alphas{0.3};
    double sigma = 0.03;
    double delta = 0.05;
    std::size_t posterior_pairs = 5;
    std::vector<BoundName> bounds{BoundName::mcallester, BoundName::mult, BoundName::iw, BoundName::mmd};
    bool oracle_mode = false;
    std::map<BoundName, ParamGrid> grids;  // missing entries use default_grid()

    std::size_t mmd_shuffles = 10;
    std::vector<double> mmd_bandwidths;  // empty: median heuristic
    double kernel_bound = 1.0;

    TrainConfig prior_training{3e-3, 0.95, 128, 1, 0};
    TrainConfig posterior_training{3e-3, 0.95, 128, 5, 0};
    CheckpointSchedule schedule;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    std::optional<std::filesystem::path> output_csv;
    std::optional<std::filesystem::path> output_json;

    /// Throws std::invalid_argument on inconsistent settings, e.g. the add
    /// bound without oracle mode.
    void validate() const;
    ParamGrid grid_for(BoundName b) const;
};

/// Relative paths in the document resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ReportRow {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::size_t checkpoint_index = 0;
    double seen_fraction = 0.0;
    std::size_t eval_size = 0;  // |S \ S_alpha|, the m used by every bound
    std::size_t n_target = 0;
    double kl = 0.0;
    double mmd = 0.0;
    RiskEstimates estimates;
    std::vector<BoundResult> bounds;
    double wall_seconds = 0.0;  // kept out of emitted files so they stay reproducible
};

struct RunReport {
    std::vector<ReportRow> rows;  // sorted by (seed, alpha, checkpoint_index)
};

/// Runs every (seed, alpha) job and evaluates the requested bounds at every
/// posterior checkpoint. Errors are rethrown with the job context attached.
RunReport run_experiment(const ExperimentConfig& cfg);

/// One CSV line: a (seed, alpha, checkpoint, bound) combination.
struct FlatRow {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::size_t checkpoint_index = 0;
    double seen_fraction = 0.0;
    std::string bound_name;
    double bound_value = 0.0;
    std::string param_json;
    double delta_effective = 0.0;
    double gibbs_source_risk = 0.0;
    std::optional<double> gibbs_weighted_risk;
    double disagreement_source = 0.0;
    double disagreement_target = 0.0;
    double joint_error_source = 0.0;
    double kl = 0.0;
    double mmd = 0.0;
    std::optional<double> oracle_target_gibbs_risk;
    bool oracle_used = false;

    friend bool operator==(const FlatRow&, const FlatRow&) = default;
};

const std::vector<std::string>& report_csv_columns();
std::vector<FlatRow> flatten(const RunReport& report);

void write_report_csv(std::ostream& out, const RunReport& report);
std::vector<FlatRow> read_report_csv(std::istream& in);
nlohmann::json report_to_json(const RunReport& report);

enum class ReportFormat { csv, json };
void emit(const RunReport& report, ReportFormat format, const std::filesystem::path& path);

struct SummaryRow {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::string bound_name;
    double min_value = 0.0;
    std::size_t argmin_checkpoint = 0;
    std::optional<double> oracle_risk_at_min;
    std::optional<double> best_oracle_risk;
};

/// Per (seed, alpha, bound): minimum over checkpoints (first checkpoint wins
/// ties), the oracle target risk there, and the best oracle risk seen.
std::vector<SummaryRow> report_summary(const std::vector<FlatRow>& rows);
void print_summary(std::ostream& out, const std::vector<SummaryRow>& summary);

}  // namespace pbda
