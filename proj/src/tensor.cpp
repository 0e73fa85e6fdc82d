#include "risnoma/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "risnoma/error.hpp"

namespace risnoma::grad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ConfigurationError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string());
    }
}

Tensor Tensor::row(std::initializer_list<double> values) {
    return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::row(std::span<const double> values) {
    return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Tensor::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1) {
        throw UsageError("item() requires a 1x1 tensor, got " + shape_string());
    }
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

} // namespace risnoma::grad
