#include "pbda/sample.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pbda {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("Matrix: data length does not match shape");
    }
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= rows_) throw std::out_of_range("Matrix::select_rows: index out of range");
        auto src = row(idx[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw std::invalid_argument("Matrix::append_row: width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

void LabeledSample::validate() const {
    const std::size_t m = features.rows();
    if (labels.size() != m) throw std::invalid_argument("LabeledSample: labels length mismatch");
    if (origin && origin->size() != m) throw std::invalid_argument("LabeledSample: origin length mismatch");
    if (weights) {
        if (weights->size() != m) throw std::invalid_argument("LabeledSample: weights length mismatch");
        for (double w : *weights) {
            // Zero is allowed: rows outside the target support carry no target mass.
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw std::invalid_argument("LabeledSample: importance weights must be finite and nonnegative");
            }
        }
    }
    for (double v : features.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("LabeledSample: non-finite feature value");
    }
}

LabeledSample LabeledSample::select(std::span<const std::size_t> idx) const {
    LabeledSample out;
    out.features = features.select_rows(idx);
    out.labels.reserve(idx.size());
    for (auto i : idx) out.labels.push_back(labels.at(i));
    if (origin) {
        std::vector<int> o;
        o.reserve(idx.size());
        for (auto i : idx) o.push_back((*origin)[i]);
        out.origin = std::move(o);
    }
    if (weights) {
        std::vector<double> w;
        w.reserve(idx.size());
        for (auto i : idx) w.push_back((*weights)[i]);
        out.weights = std::move(w);
    }
    return out;
}

LabeledSample concat(const LabeledSample& a, const LabeledSample& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    if (a.dim() != b.dim()) throw std::invalid_argument("concat: feature dimensions differ");
    if (a.origin.has_value() != b.origin.has_value() || a.weights.has_value() != b.weights.has_value()) {
        throw std::invalid_argument("concat: optional columns differ between samples");
    }
    LabeledSample out = a;
    for (std::size_t i = 0; i < b.size(); ++i) out.features.append_row(b.features.row(i));
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    if (a.origin) out.origin->insert(out.origin->end(), b.origin->begin(), b.origin->end());
    if (a.weights) out.weights->insert(out.weights->end(), b.weights->begin(), b.weights->end());
    return out;
}

}  // namespace pbda
