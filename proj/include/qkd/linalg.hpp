#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qkd {

using Vec = std::vector<double>;

// Row-major dense matrix; sized for the small layers used here, so plain
// loops beat any BLAS dispatch overhead.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
    double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
};

inline Vec matvec(const Mat& m, const Vec& x) {
    if (static_cast<int>(x.size()) != m.cols) throw std::invalid_argument("matvec shape");
    Vec y(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

// y = M^T x
inline Vec matvec_t(const Mat& m, const Vec& x) {
    if (static_cast<int>(x.size()) != m.rows) throw std::invalid_argument("matvec_t shape");
    Vec y(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        const double xr = x[r];
        for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
    }
    return y;
}

// M += u v^T
inline void add_outer(Mat& m, const Vec& u, const Vec& v) {
    for (int r = 0; r < m.rows; ++r) {
        double* row = m.row(r);
        const double ur = u[r];
        for (int c = 0; c < m.cols; ++c) row[c] += ur * v[c];
    }
}

inline void add_inplace(Vec& y, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace qkd
