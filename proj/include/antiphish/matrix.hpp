#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "antiphish/common.hpp"

namespace antiphish {

// Dense row-major matrix of doubles. Enough linear algebra for this library;
// nothing more.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(size_t r, size_t c) { return a[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return a[r * cols + c]; }

    double* row(size_t r) { return a.data() + r * cols; }
    const double* row(size_t r) const { return a.data() + r * cols; }

    size_t size() const { return a.size(); }

    bool all_finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

using Vec = std::vector<double>;

inline double dot(const double* x, const double* y, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw ShapeMismatch("dot: size mismatch");
    return dot(x.data(), y.data(), x.size());
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    if (x.size() != y.size()) throw ShapeMismatch("axpy: size mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// out = W * x  (W: m x n, x: n)
inline void matvec(const Matrix& W, const double* x, double* out) {
    for (size_t r = 0; r < W.rows; ++r) out[r] = dot(W.row(r), x, W.cols);
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double squared_norm(const Vec& v) { return dot(v.data(), v.data(), v.size()); }

}  // namespace antiphish
