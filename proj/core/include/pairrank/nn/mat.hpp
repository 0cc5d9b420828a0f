#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace pairrank::nn {

/// Dense row-major matrix of doubles. Row vectors are 1 x n.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> w;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), w(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& at(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return w[static_cast<size_t>(r) * cols + c];
    }
    double at(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return w[static_cast<size_t>(r) * cols + c];
    }

    size_t size() const { return w.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    static Mat zeros_like(const Mat& o) { return Mat(o.rows, o.cols); }
    static Mat row(const std::vector<double>& v) {
        Mat m(1, static_cast<int>(v.size()));
        m.w = v;
        return m;
    }
};

} // namespace pairrank::nn
