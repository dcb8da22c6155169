#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"

namespace oscnet {

// Dense row-major matrix of doubles. Just storage plus element access; the
// network kernels that use it live in nn.hpp.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0) throw ValidationError("Matrix: dimensions must be positive");
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (rows == 0 || cols == 0) throw ValidationError("Matrix: dimensions must be positive");
        if (values_.size() != rows * cols) {
            throw ValidationError("Matrix: expected " + std::to_string(rows * cols) + " values, got " +
                                  std::to_string(values_.size()));
        }
        require_finite("Matrix");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    double* row(std::size_t r) noexcept { return values_.data() + r * cols_; }
    const double* row(std::size_t r) const noexcept { return values_.data() + r * cols_; }

    const std::vector<double>& values() const noexcept { return values_; }

    void require_finite(const char* who) const {
        for (double v : values_) {
            if (!std::isfinite(v)) throw ValidationError(std::string(who) + ": non-finite value");
        }
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

}  // namespace oscnet
