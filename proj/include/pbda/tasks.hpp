#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "pbda/divergences.hpp"
#include "pbda/sample.hpp"

namespace pbda {

/// Gaussian mixture component shared by both domains; only the mixing
/// weights differ between source and target.
struct MixtureComponent {
    std::vector<double> mean;
    double source_weight = 0.0;
    double target_weight = 0.0;
};

/// Fully synthetic covariate-shift task. Labels follow one rule in both
/// domains: y = 1[<normal, x> + offset > 0], flipped with probability label_noise.
/// With label_sharpness > 0 the threshold is replaced by a logistic model,
/// P(y = 1 | x) = sigmoid(label_sharpness * (<normal, x> + offset)), before flips.
struct SyntheticSpec {
    std::size_t dim = 2;
    std::vector<MixtureComponent> components;
    double component_std = 1.0;
    std::vector<double> label_normal;
    double label_offset = 0.0;
    double label_noise = 0.0;
    double label_sharpness = 0.0;  // 0: hard threshold
    std::size_t n_source = 1000;
    std::size_t n_target = 1000;
    std::size_t n_oracle = 0;  // 0: the labeled target sample doubles as the oracle sample
    std::uint64_t seed = 0;

    /// Throws OverlapViolation when a component has target mass but no source
    /// mass (unbounded density ratio), std::invalid_argument for other defects.
    void validate() const;

    /// Exact w(x) = T_x(x) / S_x(x).
    double density_ratio(std::span<const double> x) const;
    /// max_k t_k / s_k: the supremum of the density ratio (attained in the limit
    /// along directions where that component dominates; an upper bound otherwise).
    double beta_infinity() const;
    /// Noise-free label rule.
    Label label_rule(std::span<const double> x) const;
    /// P(y = 1 | x), identical in both domains.
    double positive_probability(std::span<const double> x) const;

    /// Two 2-D components at (-1.5, 0) and (1.5, 0), std 1, source mix
    /// (0.85, 0.15), target mix (0.15, 0.85), so beta_inf = 17/3; logistic
    /// labels along x0 + x1 with sharpness 2.
    static SyntheticSpec default_2d();
};

nlohmann::json to_json(const SyntheticSpec& s);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MixtureTaskSpec& s);
MixtureTaskSpec mixture_spec_from_json(const nlohmann::json& j);

enum class TaskKind { synthetic, mixture, one_sided };

/// A UDA task. Source rows carry exact importance weights; target labels are
/// kept only in the oracle sample.
struct TaskInstance {
    TaskKind kind = TaskKind::synthetic;
    LabeledSample source;
    UnlabeledSample target_x;
    LabeledSample target_labeled_oracle;
    double beta_inf = 1.0;
    std::optional<SyntheticSpec> synthetic;
    std::optional<MixtureTaskSpec> mixture;
    std::optional<double> move_fraction;
    std::uint64_t seed = 0;
};

/// Derive a mixture spec whose counts match the given pools (labels are class ids).
MixtureTaskSpec mixture_spec_for_pools(const LabeledSample& pool0, const LabeledSample& pool1,
                                       std::vector<double> source_share, int binary_relabel_threshold);

/// Splits each (class, origin) cell of the pools by a seeded shuffle, binarizes
/// labels by the spec threshold and attaches the exact per-cell weights.
TaskInstance build_mixture_task(const LabeledSample& pool0, const LabeledSample& pool1, const MixtureTaskSpec& spec,
                                std::uint64_t seed);

/// A fraction of pool_shared joins pool_source_only as the source; the rest is
/// the target. Source-only rows lie outside the target support and get weight 0.
TaskInstance build_one_sided_task(const LabeledSample& pool_source_only, const LabeledSample& pool_shared,
                                  double move_fraction, std::uint64_t seed = 0);

TaskInstance build_synthetic_task(const SyntheticSpec& spec);

/// Dataset CSV: header f0,...,f{d-1},label[,origin][,weight]. Labels must be
/// integers in [0, num_classes); errors name the offending line.
LabeledSample load_dataset(const std::filesystem::path& path, std::size_t num_classes = 2);
void save_dataset(const std::filesystem::path& path, const LabeledSample& sample);

/// Writes source.csv, target.csv (labels for oracle use only), optional
/// target_oracle.csv and weights.csv, and manifest.json into `dir`.
std::filesystem::path write_task(const std::filesystem::path& dir, const TaskInstance& task);
TaskInstance load_task(const std::filesystem::path& manifest);

}  // namespace pbda
