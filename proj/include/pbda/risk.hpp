#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pbda/nn.hpp"
#include "pbda/sample.hpp"
#include "pbda/stochastic.hpp"

namespace pbda {

/// Monte-Carlo average over posterior draws (or pairs) and its standard error.
struct Estimate {
    double value = 0.0;
    double mc_std = 0.0;
};

/// Mean and standard error (sample std / sqrt(n)) of per-draw values.
Estimate summarize_draws(std::span<const double> per_draw);

/// Predictions of every posterior draw on one feature matrix, draw-major.
struct PredictionTable {
    std::vector<std::vector<Label>> by_draw;

    static PredictionTable compute(const MlpArchitecture& arch, const PosteriorSampleSet& samples, const Matrix& X);
    std::size_t num_draws() const { return by_draw.size(); }
    std::size_t num_rows() const { return by_draw.empty() ? 0 : by_draw.front().size(); }
};

double empirical_risk(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data);
double weighted_empirical_risk(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data);

Estimate gibbs_risk(const MlpArchitecture& arch, const PosteriorSampleSet& samples, const LabeledSample& data);
Estimate gibbs_weighted_risk(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                             const LabeledSample& data);
/// Averaged over the P pairs (draws 2i, 2i+1), not over all pairings.
Estimate expected_disagreement(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                               const UnlabeledSample& data);
Estimate expected_joint_error(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                              const LabeledSample& data);
/// |d_T - d_S| from the same pairs on both samples.
Estimate domain_disagreement(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                             const UnlabeledSample& source_x, const UnlabeledSample& target_x);

// Table-based variants; the functions above compute a table and call these.
Estimate gibbs_risk(const PredictionTable& preds, std::span<const Label> labels);
Estimate gibbs_weighted_risk(const PredictionTable& preds, std::span<const Label> labels,
                             std::span<const double> weights);
Estimate expected_disagreement(const PredictionTable& preds);
Estimate expected_joint_error(const PredictionTable& preds, std::span<const Label> labels);
Estimate domain_disagreement(const PredictionTable& source, const PredictionTable& target);

/// Target labels are only usable when oracle access is switched on explicitly.
enum class OracleMode { disabled, enabled };

class OracleRefusal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// |e_T - e_S|, which needs target labels. Throws OracleRefusal unless
/// `mode` is OracleMode::enabled.
double lambda_rho_oracle(const MlpArchitecture& arch, const PosteriorSampleSet& samples, const LabeledSample& source,
                         const LabeledSample& target_labeled, OracleMode mode);

struct RiskEstimates {
    Estimate gibbs_risk;
    std::optional<Estimate> gibbs_weighted_risk;
    Estimate disagreement_source;
    Estimate disagreement_target;
    Estimate joint_error_source;
    Estimate domain_disagreement;
    // Oracle channel: filled only from labeled target data.
    std::optional<Estimate> joint_error_target;
    std::optional<Estimate> target_gibbs_risk;
};

/// All estimates a bound evaluation needs, from one set of predictions per sample.
/// `target_oracle` (labeled target rows) feeds only the oracle fields.
RiskEstimates estimate_risks(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                             const LabeledSample& source_eval, const UnlabeledSample& target_x,
                             const LabeledSample* target_oracle = nullptr);

}  // namespace pbda
