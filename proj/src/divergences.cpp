#include "pbda/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "pbda/kernels.hpp"
#include "pbda/random.hpp"

namespace pbda {

namespace {

void check_kappa(double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kernel bandwidth must be > 0");
}

}  // namespace

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double kappa) {
    check_kappa(kappa);
    if (x.size() != y.size()) throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    return kernels::rbf(x, y, kappa);
}

double mmd_quadratic_biased(const Matrix& X, const Matrix& Y, double kappa) {
    check_kappa(kappa);
    if (X.empty() || Y.empty()) throw std::invalid_argument("mmd_quadratic_biased: empty sample");
    const double nx = static_cast<double>(X.rows()), ny = static_cast<double>(Y.rows());
    const double kxx = kernels::parallel::kernel_sum(X, X, kappa) / (nx * nx);
    const double kyy = kernels::parallel::kernel_sum(Y, Y, kappa) / (ny * ny);
    const double kxy = kernels::parallel::kernel_sum(X, Y, kappa) / (nx * ny);
    return std::sqrt(std::max(0.0, kxx - 2.0 * kxy + kyy));
}

void MmdConfig::validate() const {
    if (bandwidths.empty()) throw std::invalid_argument("MmdConfig: at least one bandwidth required");
    for (double k : bandwidths) check_kappa(k);
    if (!std::is_sorted(bandwidths.begin(), bandwidths.end())) {
        throw std::invalid_argument("MmdConfig: bandwidths must be sorted ascending");
    }
    if (shuffles == 0) throw std::invalid_argument("MmdConfig: shuffles must be >= 1");
}

namespace {

std::vector<kernels::PairedIndex> blocks_from(std::span<const std::size_t> x_rows, std::span<const std::size_t> y_rows,
                                              std::span<const std::size_t> perm) {
    std::vector<kernels::PairedIndex> blocks(perm.size() / 2);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const std::size_t p0 = perm[2 * b], p1 = perm[2 * b + 1];
        blocks[b] = {x_rows[p0], y_rows[p0], x_rows[p1], y_rows[p1]};
    }
    return blocks;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

double mmd_linear_statistic(const Matrix& X, const Matrix& Y, std::span<const std::size_t> perm, double kappa) {
    check_kappa(kappa);
    const std::size_t n = perm.size();
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("mmd_linear_statistic: pairing length must be even and >= 2");
    if (X.rows() < n || Y.rows() < n) throw std::invalid_argument("mmd_linear_statistic: pairing longer than sample");
    const auto rows = iota_rows(n);
    const auto blocks = blocks_from(rows, rows, perm);
    const auto h = kernels::parallel::linear_mmd_terms(X, Y, blocks, kappa);
    double s = 0.0;
    for (double v : h) s += v;
    return 2.0 * s / static_cast<double>(n);
}

LinearMmd mmd_linear_detail(const Matrix& X, const Matrix& Y, double kappa, std::size_t shuffles,
                            std::uint64_t seed) {
    check_kappa(kappa);
    if (shuffles == 0) throw std::invalid_argument("mmd_linear: shuffles must be >= 1");
    std::size_t n = std::min(X.rows(), Y.rows());
    n -= n % 2;
    if (n < 2) throw std::invalid_argument("mmd_linear: need at least 2 rows in each sample");

    const bool equal = X.rows() == Y.rows();
    const bool x_longer = X.rows() > Y.rows();
    const auto leading = iota_rows(n);

    double total = 0.0, total_sq = 0.0;
    std::size_t count = 0;
    double sum_of_means = 0.0;
    for (std::size_t s = 0; s < shuffles; ++s) {
        std::vector<std::size_t> x_rows = leading, y_rows = leading;
        if (!equal) {
            Rng sub = make_rng(seed, "mmd-subset", s);
            auto pick = random_permutation(std::max(X.rows(), Y.rows()), sub);
            pick.resize(n);
            (x_longer ? x_rows : y_rows) = std::move(pick);
        }
        Rng pair_rng = make_rng(seed, "mmd-pairing", s);
        const auto perm = random_permutation(n, pair_rng);
        const auto blocks = blocks_from(x_rows, y_rows, perm);
        const auto h = kernels::parallel::linear_mmd_terms(X, Y, blocks, kappa);
        double s_h = 0.0;
        for (double v : h) {
            s_h += v;
            total += v;
            total_sq += v * v;
        }
        ++count;
        sum_of_means += s_h / static_cast<double>(h.size());
    }
    const double blocks_per_shuffle = static_cast<double>(n / 2);
    const double pooled = static_cast<double>(count) * blocks_per_shuffle;
    const double mean_h = total / pooled;
    const double var_h = pooled > 1 ? std::max(0.0, (total_sq - pooled * mean_h * mean_h) / (pooled - 1.0)) : 0.0;
    return {sum_of_means / static_cast<double>(count), std::sqrt(var_h / blocks_per_shuffle)};
}

double mmd_linear_shuffled(const Matrix& X, const Matrix& Y, double kappa, std::size_t shuffles, std::uint64_t seed) {
    return mmd_linear_detail(X, Y, kappa, shuffles, seed).value;
}

double mmd_estimate(const Matrix& X, const Matrix& Y, const MmdConfig& cfg) {
    cfg.validate();
    double best = 0.0;
    for (double kappa : cfg.bandwidths) {
        best = std::max(best, std::max(0.0, mmd_linear_shuffled(X, Y, kappa, cfg.shuffles, cfg.seed)));
    }
    return std::sqrt(best);
}

std::span<const double> default_bandwidth_multipliers() {
    static const double multipliers[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    return multipliers;
}

std::vector<double> median_heuristic_bandwidths(const Matrix& X, const Matrix& Y, std::uint64_t seed,
                                                std::span<const double> multipliers, std::size_t max_points) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("median_heuristic_bandwidths: dimension mismatch");
    const std::size_t total = X.rows() + Y.rows();
    if (total < 2) throw std::invalid_argument("median_heuristic_bandwidths: need at least 2 points");
    Rng rng = make_rng(seed, "median-heuristic");
    auto pick = random_permutation(total, rng);
    pick.resize(std::min(total, std::max<std::size_t>(max_points, 2)));
    auto point = [&](std::size_t i) { return i < X.rows() ? X.row(i) : Y.row(i - X.rows()); };

    std::vector<double> dists;
    dists.reserve(pick.size() * (pick.size() - 1) / 2);
    for (std::size_t a = 0; a < pick.size(); ++a) {
        for (std::size_t b = a + 1; b < pick.size(); ++b) {
            dists.push_back(std::sqrt(kernels::squared_distance(point(pick[a]), point(pick[b]))));
        }
    }
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double median = *mid;
    if (!(median > 0.0)) median = 1.0;  // all sampled points coincide

    std::vector<double> out;
    for (double m : multipliers) out.push_back(m * median);
    std::sort(out.begin(), out.end());
    return out;
}

// ---- mixtures ---------------------------------------------------------------

std::size_t mixture_source_count(const MixtureTaskSpec& spec, std::size_t cls, int origin) {
    const std::size_t count = spec.per_class_counts.at(cls)[static_cast<std::size_t>(origin)];
    const double share = origin == 1 ? spec.source_share.at(cls) : 1.0 - spec.source_share.at(cls);
    return static_cast<std::size_t>(std::llround(share * static_cast<double>(count)));
}

void MixtureTaskSpec::validate() const {
    if (num_classes == 0) throw std::invalid_argument("MixtureTaskSpec: num_classes must be >= 1");
    if (source_share.size() != num_classes || per_class_counts.size() != num_classes) {
        throw std::invalid_argument("MixtureTaskSpec: per-class vectors must have num_classes entries");
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double s = source_share[c];
        if (!(s > 0.0 && s < 1.0)) {
            throw OverlapViolation("MixtureTaskSpec: source share of class " + std::to_string(c) +
                                   " must lie strictly in (0,1); otherwise target and source supports do not overlap");
        }
        for (int o = 0; o < 2; ++o) {
            const std::size_t n = per_class_counts[c][static_cast<std::size_t>(o)];
            if (n == 0) throw std::invalid_argument("MixtureTaskSpec: every (class, origin) count must be >= 1");
            const std::size_t src = mixture_source_count(*this, c, o);
            if (src == 0 || src >= n) {
                throw OverlapViolation("MixtureTaskSpec: class " + std::to_string(c) + " origin " + std::to_string(o) +
                                       " would be empty in the source or the target after rounding");
            }
        }
    }
}

MixtureTaskSpec MixtureTaskSpec::twelfths_schedule(std::size_t num_classes, std::size_t count_per_cell) {
    MixtureTaskSpec spec;
    spec.num_classes = num_classes;
    spec.binary_relabel_threshold = static_cast<int>(num_classes / 2);
    for (std::size_t c = 0; c < num_classes; ++c) {
        spec.source_share.push_back(static_cast<double>(c + 1) / 12.0);
        spec.per_class_counts.push_back({count_per_cell, count_per_cell});
    }
    return spec;
}

double WeightTable::max_weight() const {
    double m = 0.0;
    for (const auto& c : cells) m = std::max(m, c.weight);
    return m;
}

WeightTable mixture_weights(const MixtureTaskSpec& spec) {
    spec.validate();
    WeightTable t;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (int o = 0; o < 2; ++o) {
            WeightCell cell{c, o, mixture_source_count(spec, c, o), 0, 0.0};
            cell.target_count = spec.per_class_counts[c][static_cast<std::size_t>(o)] - cell.source_count;
            t.source_total += cell.source_count;
            t.target_total += cell.target_count;
            t.cells.push_back(cell);
        }
    }
    // Ratio of integer products: exact whenever the true ratio is representable.
    for (auto& cell : t.cells) {
        cell.weight = (static_cast<double>(cell.target_count) * static_cast<double>(t.source_total)) /
                      (static_cast<double>(cell.source_count) * static_cast<double>(t.target_total));
    }
    return t;
}

double beta_infinity(const MixtureTaskSpec& spec) {
    return mixture_weights(spec).max_weight();
}

double one_sided_weight(double move_fraction, std::size_t source_total, std::size_t target_total) {
    if (!(move_fraction > 0.0 && move_fraction < 1.0)) {
        throw OverlapViolation("one-sided task: move fraction must lie strictly in (0,1)");
    }
    if (source_total == 0 || target_total == 0) throw std::invalid_argument("one-sided task: empty source or target");
    return (1.0 - move_fraction) / move_fraction * static_cast<double>(source_total) /
           static_cast<double>(target_total);
}

void write_weight_table_csv(std::ostream& out, const WeightTable& table) {
    out << "class,origin,source_count,target_count,weight\n";
    const auto old = out.precision(17);
    for (const auto& c : table.cells) {
        out << c.cls << ',' << c.origin << ',' << c.source_count << ',' << c.target_count << ',' << c.weight << '\n';
    }
    out.precision(old);
}

}  // namespace pbda
