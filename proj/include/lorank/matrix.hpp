#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lorank/errors.hpp"

namespace lorank {

/// Process-wide count of live Matrix elements. The memory-bound tests for the
/// factor-space squeeze path read `peak()` to prove the dense delta matrix is
/// never materialized.
class MatrixAllocStats {
public:
    static std::size_t current() { return current_().load(std::memory_order_relaxed); }
    static std::size_t peak() { return peak_().load(std::memory_order_relaxed); }

    /// Resets the peak to the currently live element count.
    static void reset_peak() { peak_().store(current(), std::memory_order_relaxed); }

    static void note(std::size_t n) {
        const std::size_t now = current_().fetch_add(n, std::memory_order_relaxed) + n;
        auto& p = peak_();
        std::size_t prev = p.load(std::memory_order_relaxed);
        while (prev < now && !p.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
        }
    }

    static void release(std::size_t n) { current_().fetch_sub(n, std::memory_order_relaxed); }

private:
    static std::atomic<std::size_t>& current_() {
        static std::atomic<std::size_t> v{0};
        return v;
    }
    static std::atomic<std::size_t>& peak_() {
        static std::atomic<std::size_t> v{0};
        return v;
    }
};

/// Dense real matrix, row-major, 64-bit elements. All numeric carriers in the
/// library are instances of this type; checkpoint storage narrows to 32-bit
/// floats at the I/O boundary only.
class Matrix {
public:
    Matrix() noexcept = default;

    /// Zero-initialized rows x cols matrix.
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), 0.0) {
        track();
    }

    /// Takes ownership of row-major data; every entry must be finite.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != checked_size(rows, cols)) {
            throw ValidationError("matrix data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
        }
        for (double v : data_) {
            if (!std::isfinite(v)) {
                throw ValidationError("matrix entry is not finite");
            }
        }
        track();
    }

    Matrix(const Matrix& o) : rows_(o.rows_), cols_(o.cols_), data_(o.data_) { track(); }

    Matrix(Matrix&& o) noexcept
        : rows_(o.rows_), cols_(o.cols_), data_(std::move(o.data_)), tracked_(o.tracked_) {
        o.rows_ = o.cols_ = 0;
        o.tracked_ = 0;
        o.data_.clear();
    }

    Matrix& operator=(const Matrix& o) {
        if (this != &o) {
            untrack();
            rows_ = o.rows_;
            cols_ = o.cols_;
            data_ = o.data_;
            track();
        }
        return *this;
    }

    Matrix& operator=(Matrix&& o) noexcept {
        if (this != &o) {
            untrack();
            rows_ = o.rows_;
            cols_ = o.cols_;
            data_ = std::move(o.data_);
            tracked_ = o.tracked_;
            o.rows_ = o.cols_ = 0;
            o.tracked_ = 0;
            o.data_.clear();
        }
        return *this;
    }

    ~Matrix() { untrack(); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    static std::size_t checked_size(std::size_t rows, std::size_t cols) {
        if (rows == 0 || cols == 0) {
            throw ValidationError("matrix dimensions must be positive");
        }
        return rows * cols;
    }

    void track() {
        tracked_ = data_.size();
        if (tracked_ != 0) MatrixAllocStats::note(tracked_);
    }
    void untrack() {
        if (tracked_ != 0) {
            MatrixAllocStats::release(tracked_);
            tracked_ = 0;
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
    std::size_t tracked_ = 0;
};

inline Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// C = A * B with plain ascending-k dot products, so results are bit-stable
/// and match a naive triple-loop reference exactly.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ValidationError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                              std::to_string(b.rows()) + " do not match");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

/// C = A^T * B without forming the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ValidationError("matmul_tn: row counts do not match");
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

/// C = A * B^T without forming the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ValidationError("matmul_nt: column counts do not match");
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    }
    return c;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ValidationError("subtract: shape mismatch");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
    return c;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline double squared_frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

/// ||approx - reference||_F / ||reference||_F; falls back to the absolute
/// error when the reference is zero.
inline double relative_frobenius_error(const Matrix& approx, const Matrix& reference) {
    const double denom = frobenius_norm(reference);
    const double num = frobenius_norm(subtract(approx, reference));
    if (denom == 0.0) return num;
    return num / denom;
}

} // namespace lorank
