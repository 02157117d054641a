#include "pbda/risk.hpp"

#include <cmath>

#include "pbda/kernels.hpp"

namespace pbda {

Estimate summarize_draws(std::span<const double> per_draw) {
    if (per_draw.empty()) throw std::invalid_argument("summarize_draws: no values");
    const double n = static_cast<double>(per_draw.size());
    double mean = 0.0;
    for (double v : per_draw) mean += v;
    mean /= n;
    if (per_draw.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : per_draw) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

PredictionTable PredictionTable::compute(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                                         const Matrix& X) {
    PredictionTable t;
    t.by_draw.reserve(samples.draws.size());
    for (const auto& w : samples.draws) t.by_draw.push_back(kernels::parallel::predict_labels(arch, w, X));
    return t;
}

namespace {

void require_rows(std::size_t rows, const char* who) {
    if (rows == 0) throw std::invalid_argument(std::string(who) + ": empty data");
}

void require_pairs(const PredictionTable& t, const char* who) {
    if (t.num_draws() < 2) throw std::invalid_argument(std::string(who) + ": need at least one pair of draws");
}

double error_rate(std::span<const Label> pred, std::span<const Label> labels) {
    std::size_t errors = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) errors += pred[i] != labels[i];
    return static_cast<double>(errors) / static_cast<double>(pred.size());
}

double weighted_error(std::span<const Label> pred, std::span<const Label> labels, std::span<const double> weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] != labels[i]) s += weights[i];
    }
    return s / static_cast<double>(pred.size());
}

const std::vector<double>& require_weights(const LabeledSample& data) {
    if (!data.weights) throw std::invalid_argument("weighted risk: sample carries no importance weights");
    return *data.weights;
}

}  // namespace

double empirical_risk(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data) {
    require_rows(data.size(), "empirical_risk");
    return error_rate(kernels::parallel::predict_labels(arch, w, data.features), data.labels);
}

double weighted_empirical_risk(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data) {
    require_rows(data.size(), "weighted_empirical_risk");
    const auto& weights = require_weights(data);
    return weighted_error(kernels::parallel::predict_labels(arch, w, data.features), data.labels, weights);
}

Estimate gibbs_risk(const PredictionTable& preds, std::span<const Label> labels) {
    require_rows(labels.size(), "gibbs_risk");
    if (preds.num_draws() == 0) throw std::invalid_argument("gibbs_risk: no posterior draws");
    std::vector<double> per;
    for (const auto& p : preds.by_draw) per.push_back(error_rate(p, labels));
    return summarize_draws(per);
}

Estimate gibbs_weighted_risk(const PredictionTable& preds, std::span<const Label> labels,
                             std::span<const double> weights) {
    require_rows(labels.size(), "gibbs_weighted_risk");
    if (weights.size() != labels.size()) throw std::invalid_argument("gibbs_weighted_risk: weights length mismatch");
    std::vector<double> per;
    for (const auto& p : preds.by_draw) per.push_back(weighted_error(p, labels, weights));
    return summarize_draws(per);
}

Estimate expected_disagreement(const PredictionTable& preds) {
    require_pairs(preds, "expected_disagreement");
    require_rows(preds.num_rows(), "expected_disagreement");
    std::vector<double> per;
    for (std::size_t k = 0; k + 1 < preds.num_draws(); k += 2) {
        per.push_back(error_rate(preds.by_draw[k], preds.by_draw[k + 1]));
    }
    return summarize_draws(per);
}

Estimate expected_joint_error(const PredictionTable& preds, std::span<const Label> labels) {
    require_pairs(preds, "expected_joint_error");
    require_rows(labels.size(), "expected_joint_error");
    std::vector<double> per;
    for (std::size_t k = 0; k + 1 < preds.num_draws(); k += 2) {
        const auto& a = preds.by_draw[k];
        const auto& b = preds.by_draw[k + 1];
        std::size_t both = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) both += (a[i] != labels[i]) && (b[i] != labels[i]);
        per.push_back(static_cast<double>(both) / static_cast<double>(labels.size()));
    }
    return summarize_draws(per);
}

Estimate domain_disagreement(const PredictionTable& source, const PredictionTable& target) {
    require_pairs(source, "domain_disagreement");
    if (source.num_draws() != target.num_draws()) {
        throw std::invalid_argument("domain_disagreement: draw counts differ between samples");
    }
    require_rows(source.num_rows(), "domain_disagreement");
    require_rows(target.num_rows(), "domain_disagreement");
    const Estimate ds = expected_disagreement(source);
    const Estimate dt = expected_disagreement(target);
    std::vector<double> diff;
    for (std::size_t k = 0; k + 1 < source.num_draws(); k += 2) {
        diff.push_back(error_rate(target.by_draw[k], target.by_draw[k + 1]) -
                       error_rate(source.by_draw[k], source.by_draw[k + 1]));
    }
    return {std::abs(dt.value - ds.value), summarize_draws(diff).mc_std};
}

Estimate gibbs_risk(const MlpArchitecture& arch, const PosteriorSampleSet& samples, const LabeledSample& data) {
    return gibbs_risk(PredictionTable::compute(arch, samples, data.features), data.labels);
}

Estimate gibbs_weighted_risk(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                             const LabeledSample& data) {
    const auto& weights = require_weights(data);
    return gibbs_weighted_risk(PredictionTable::compute(arch, samples, data.features), data.labels, weights);
}

Estimate expected_disagreement(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                               const UnlabeledSample& data) {
    return expected_disagreement(PredictionTable::compute(arch, samples, data.features));
}

Estimate expected_joint_error(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                              const LabeledSample& data) {
    return expected_joint_error(PredictionTable::compute(arch, samples, data.features), data.labels);
}

Estimate domain_disagreement(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                             const UnlabeledSample& source_x, const UnlabeledSample& target_x) {
    return domain_disagreement(PredictionTable::compute(arch, samples, source_x.features),
                               PredictionTable::compute(arch, samples, target_x.features));
}

double lambda_rho_oracle(const MlpArchitecture& arch, const PosteriorSampleSet& samples, const LabeledSample& source,
                         const LabeledSample& target_labeled, OracleMode mode) {
    if (mode != OracleMode::enabled) {
        throw OracleRefusal("lambda_rho needs target labels; enable oracle mode to compute it");
    }
    const double es = expected_joint_error(arch, samples, source).value;
    const double et = expected_joint_error(arch, samples, target_labeled).value;
    return std::abs(et - es);
}

RiskEstimates estimate_risks(const MlpArchitecture& arch, const PosteriorSampleSet& samples,
                             const LabeledSample& source_eval, const UnlabeledSample& target_x,
                             const LabeledSample* target_oracle) {
    const PredictionTable src = PredictionTable::compute(arch, samples, source_eval.features);
    const PredictionTable tgt = PredictionTable::compute(arch, samples, target_x.features);

    RiskEstimates r;
    r.gibbs_risk = gibbs_risk(src, source_eval.labels);
    if (source_eval.weights) r.gibbs_weighted_risk = gibbs_weighted_risk(src, source_eval.labels, *source_eval.weights);
    r.disagreement_source = expected_disagreement(src);
    r.disagreement_target = expected_disagreement(tgt);
    r.joint_error_source = expected_joint_error(src, source_eval.labels);
    r.domain_disagreement = domain_disagreement(src, tgt);
    if (target_oracle) {
        const PredictionTable orc = PredictionTable::compute(arch, samples, target_oracle->features);
        r.joint_error_target = expected_joint_error(orc, target_oracle->labels);
        r.target_gibbs_risk = gibbs_risk(orc, target_oracle->labels);
    }
    return r;
}

}  // namespace pbda
