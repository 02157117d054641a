#include "pbda/kernels.hpp"

#include <stdexcept>

namespace pbda::kernels {

namespace {

void check_cols(const Matrix& X, const Matrix& Y) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("kernel: feature dimensions differ");
}

double ordered_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

double block_term(const Matrix& X, const Matrix& Y, const PairedIndex& b, double kappa) {
    const auto x0 = X.row(b.x0), x1 = X.row(b.x1);
    const auto y0 = Y.row(b.y0), y1 = Y.row(b.y1);
    return rbf(x0, x1, kappa) + rbf(y0, y1, kappa) - rbf(x0, y1, kappa) - rbf(x1, y0, kappa);
}

}  // namespace

namespace serial {

std::vector<Label> predict_labels(const MlpArchitecture& arch, std::span<const double> w, const Matrix& X) {
    std::vector<Label> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict(forward(arch, w, X.row(i)));
    return out;
}

std::vector<double> kernel_row_sums(const Matrix& X, const Matrix& Y, double kappa) {
    check_cols(X, Y);
    std::vector<double> rows(X.rows(), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < Y.rows(); ++j) s += rbf(X.row(i), Y.row(j), kappa);
        rows[i] = s;
    }
    return rows;
}

double kernel_sum(const Matrix& X, const Matrix& Y, double kappa) {
    return ordered_sum(kernel_row_sums(X, Y, kappa));
}

std::vector<double> linear_mmd_terms(const Matrix& X, const Matrix& Y, std::span<const PairedIndex> blocks,
                                     double kappa) {
    check_cols(X, Y);
    std::vector<double> h(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) h[b] = block_term(X, Y, blocks[b], kappa);
    return h;
}

}  // namespace serial

namespace parallel {

std::vector<Label> predict_labels(const MlpArchitecture& arch, std::span<const double> w, const Matrix& X) {
    if (w.size() != arch.parameter_count()) throw std::invalid_argument("predict_labels: weight length mismatch");
    if (X.rows() > 0 && X.cols() != arch.input_dim()) {
        throw std::invalid_argument("predict_labels: feature dimension mismatch");
    }
    std::vector<Label> out(X.rows());
    const auto n = static_cast<long long>(X.rows());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) out[i] = predict(forward(arch, w, X.row(static_cast<std::size_t>(i))));
    return out;
}

std::vector<double> kernel_row_sums(const Matrix& X, const Matrix& Y, double kappa) {
    check_cols(X, Y);
    std::vector<double> rows(X.rows(), 0.0);
    const auto n = static_cast<long long>(X.rows());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        double s = 0.0;
        const auto xi = X.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < Y.rows(); ++j) s += rbf(xi, Y.row(j), kappa);
        rows[i] = s;
    }
    return rows;
}

double kernel_sum(const Matrix& X, const Matrix& Y, double kappa) {
    return ordered_sum(kernel_row_sums(X, Y, kappa));
}

std::vector<double> linear_mmd_terms(const Matrix& X, const Matrix& Y, std::span<const PairedIndex> blocks,
                                     double kappa) {
    check_cols(X, Y);
    std::vector<double> h(blocks.size());
    const auto n = static_cast<long long>(blocks.size());
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < n; ++b) h[b] = block_term(X, Y, blocks[b], kappa);
    return h;
}

}  // namespace parallel

}  // namespace pbda::kernels
