#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP implementation (used by
// the library) and a serial reference with the same reduction order; the two
// must agree bit-for-bit, which the tests check.

#include <cmath>
#include <span>
#include <vector>

#include "pbda/nn.hpp"
#include "pbda/sample.hpp"

namespace pbda::kernels {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double rbf(std::span<const double> a, std::span<const double> b, double kappa) {
    return std::exp(-squared_distance(a, b) / (2.0 * kappa * kappa));
}

/// Row indices of one linear-statistic block: (x0, y0) and (x1, y1).
struct PairedIndex {
    std::size_t x0, y0, x1, y1;
};

namespace serial {
/// One {0,1} prediction per row.
std::vector<Label> predict_labels(const MlpArchitecture& arch, std::span<const double> w, const Matrix& X);
/// Row sums r_i = sum_j k(x_i, y_j).
std::vector<double> kernel_row_sums(const Matrix& X, const Matrix& Y, double kappa);
/// Sum of all kernel values, reduced row sum by row sum in row order.
double kernel_sum(const Matrix& X, const Matrix& Y, double kappa);
/// h((x0,y0),(x1,y1)) = k(x0,x1) + k(y0,y1) - k(x0,y1) - k(x1,y0) per block.
std::vector<double> linear_mmd_terms(const Matrix& X, const Matrix& Y, std::span<const PairedIndex> blocks,
                                     double kappa);
}  // namespace serial

namespace parallel {
std::vector<Label> predict_labels(const MlpArchitecture& arch, std::span<const double> w, const Matrix& X);
std::vector<double> kernel_row_sums(const Matrix& X, const Matrix& Y, double kappa);
double kernel_sum(const Matrix& X, const Matrix& Y, double kappa);
std::vector<double> linear_mmd_terms(const Matrix& X, const Matrix& Y, std::span<const PairedIndex> blocks,
                                     double kappa);
}  // namespace parallel

}  // namespace pbda::kernels
