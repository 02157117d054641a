#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "pbda/sample.hpp"

namespace pbda {

/// Thrown when a task would violate covariate-shift overlap (target support
/// not contained in source support), which makes importance weights undefined.
class OverlapViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---- kernel MMD ----------------------------------------------------------

/// exp(-|x-y|^2 / (2 kappa^2)); always in (0, 1].
double gaussian_kernel(std::span<const double> x, std::span<const double> y, double kappa);

/// Biased (V-statistic) MMD, square-rooted after clamping MMD^2 at 0.
double mmd_quadratic_biased(const Matrix& X, const Matrix& Y, double kappa);

struct MmdConfig {
    std::vector<double> bandwidths;  // ascending
    std::size_t shuffles = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Linear-time statistic for one explicit pairing: rows perm[2b], perm[2b+1]
/// of both X and Y form block b. Returns (2/n) sum_b h_b with n = perm.size().
double mmd_linear_statistic(const Matrix& X, const Matrix& Y, std::span<const std::size_t> perm, double kappa);

struct LinearMmd {
    double value = 0.0;      // mean over shuffles (unbiased for MMD^2)
    double std_error = 0.0;  // std of the block terms / sqrt(blocks per shuffle)
};

/// Linear statistic averaged over `shuffles` random pairings. Both samples are
/// truncated to the even length n = min(|X|,|Y|) rounded down; the longer one
/// is subsampled afresh for each shuffle. Throws if n < 2.
LinearMmd mmd_linear_detail(const Matrix& X, const Matrix& Y, double kappa, std::size_t shuffles,
                            std::uint64_t seed);
double mmd_linear_shuffled(const Matrix& X, const Matrix& Y, double kappa, std::size_t shuffles, std::uint64_t seed);

/// sqrt(max over bandwidths of max(0, linear statistic)). An MMD, not MMD^2.
double mmd_estimate(const Matrix& X, const Matrix& Y, const MmdConfig& cfg);

/// {0.25, 0.5, 1, 2, 4}.
std::span<const double> default_bandwidth_multipliers();

/// Median pairwise distance of the pooled sample (at most `max_points` rows,
/// chosen at random) times each multiplier.
std::vector<double> median_heuristic_bandwidths(const Matrix& X, const Matrix& Y, std::uint64_t seed,
                                                std::span<const double> multipliers = default_bandwidth_multipliers(),
                                                std::size_t max_points = 1000);
// ---- mixture tasks and exact importance weights ---------------------------

/// Two-origin per-class mixture. For class c a fraction source_share[c] of the
/// origin-1 rows and (1 - source_share[c]) of the origin-0 rows go to the
/// source; the complement is the target.
struct MixtureTaskSpec {
    std::size_t num_classes = 10;
    std::vector<double> source_share;
    std::vector<std::array<std::size_t, 2>> per_class_counts;  // [class][origin]
    int binary_relabel_threshold = 5;                          // class < threshold -> label 0

    /// Throws OverlapViolation for shares outside (0,1) or splits that leave a
    /// (class, origin) cell empty on either side.
    void validate() const;

    /// Source share (c+1)/12 of origin 1 for class c, equal counts per cell.
    static MixtureTaskSpec twelfths_schedule(std::size_t num_classes, std::size_t count_per_cell);
};

/// Number of origin-`origin` rows of a cell with `count` rows that go to the source.
std::size_t mixture_source_count(const MixtureTaskSpec& spec, std::size_t cls, int origin);

struct WeightCell {
    std::size_t cls = 0;
    int origin = 0;
    std::size_t source_count = 0;
    std::size_t target_count = 0;
    double weight = 0.0;
};

struct WeightTable {
    std::vector<WeightCell> cells;  // class-major, origin 0 then 1
    std::size_t source_total = 0;
    std::size_t target_total = 0;

    double at(std::size_t cls, int origin) const { return cells.at(2 * cls + static_cast<std::size_t>(origin)).weight; }
    double max_weight() const;
};

/// w[c][o] = (target_count / #T) / (source_count / #S).
WeightTable mixture_weights(const MixtureTaskSpec& spec);
double beta_infinity(const MixtureTaskSpec& spec);

/// One-sided construction: a fraction f of a shared pool joins the source,
/// the rest is the target. In-support source rows get ((1-f)/f) * #S/#T.
double one_sided_weight(double move_fraction, std::size_t source_total, std::size_t target_total);

/// CSV with header class,origin,source_count,target_count,weight.
void write_weight_table_csv(std::ostream& out, const WeightTable& table);

}  // namespace pbda
