#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "anostream/errors.hpp"

namespace anostream {

using Vec = std::vector<double>;

// Dense row-major matrix. Small and flat on purpose: every hot loop in the
// recurrent model runs over contiguous rows.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

inline double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// out = W x + b
inline void affine(const Mat& w, const Vec& x, const Vec& b, Vec& out) {
    if (x.size() != w.cols || b.size() != w.rows)
        throw ShapeError("affine: operand shapes do not match");
    out.resize(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r)
        out[r] = dot(w.row(r), x.data(), w.cols) + b[r];
}

// out += W^T y
inline void matvec_transpose_add(const Mat& w, const Vec& y, Vec& out) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double yr = y[r];
        const double* wr = w.row(r);
        for (std::size_t c = 0; c < w.cols; ++c) out[c] += yr * wr[c];
    }
}

// W += y x^T
inline void outer_add(Mat& w, const Vec& y, const Vec& x) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        double* wr = w.row(r);
        const double yr = y[r];
        for (std::size_t c = 0; c < w.cols; ++c) wr[c] += yr * x[c];
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable softmax; maps arbitrary logits onto the simplex.
inline Vec softmax(const Vec& logits) {
    Vec out(logits.size());
    double mx = logits.empty() ? 0.0 : logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

inline double l1_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("l1_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

inline double l2_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("l2_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace anostream
