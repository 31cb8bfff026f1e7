#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace masguard {

using Vec = std::vector<double>;

// Dense row-major matrix. Small enough here that hand-rolled loops beat any
// dependency; shapes are asserted at the call sites that mix them.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline Vec matvec(const Matrix& m, const Vec& v) {
    assert(m.cols == v.size());
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * v[j];
        out[i] = s;
    }
    return out;
}

// m^T v
inline Vec matvec_transposed(const Matrix& m, const Vec& v) {
    assert(m.rows == v.size());
    Vec out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j] * v[i];
    }
    return out;
}

// m += a b^T
inline void add_outer(Matrix& m, const Vec& a, const Vec& b) {
    assert(m.rows == a.size() && m.cols == b.size());
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += a[i] * b[j];
    }
}

inline void add_scaled(Vec& y, double a, const Vec& x) {
    assert(y.size() == x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void relu_inplace(Vec& v) {
    for (double& x : v)
        if (x < 0.0) x = 0.0;
}

}  // namespace masguard
