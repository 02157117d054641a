#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pbda {

/// Dense row-major matrix of features, one example per row.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix select_rows(std::span<const std::size_t> idx) const;
    void append_row(std::span<const double> values);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Label = std::uint8_t;

/// Labeled sample S. `origin` tags which base dataset a row came from;
/// `weights` holds exact importance weights w(x) when the task provides them.
struct LabeledSample {
    Matrix features;
    std::vector<Label> labels;
    std::optional<std::vector<int>> origin;
    std::optional<std::vector<double>> weights;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    /// Throws std::invalid_argument on inconsistent lengths or invalid weights.
    void validate() const;
    LabeledSample select(std::span<const std::size_t> idx) const;

    friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Unlabeled sample S'_x from the target marginal.
struct UnlabeledSample {
    Matrix features;
    std::optional<std::vector<int>> origin;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    static UnlabeledSample from(const LabeledSample& s) { return {s.features, s.origin}; }
};

/// Concatenate two samples with matching columns; optional fields must agree in presence.
LabeledSample concat(const LabeledSample& a, const LabeledSample& b);

}  // namespace pbda
