#pragma once

#include <cstddef>
#include <vector>

#include "gesturelab/core/matrix.hpp"

namespace gesturelab::autodiff {

// Shape + flat 64-bit values. Rank 0 is not used; scalars are shape {1}.
struct TensorData {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    static TensorData zeros(std::vector<std::size_t> shape) {
        TensorData t;
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        t.shape = std::move(shape);
        t.v.assign(n, 0.0);
        return t;
    }

    static TensorData scalar(double x) {
        TensorData t;
        t.shape = {1};
        t.v = {x};
        return t;
    }

    static TensorData vector(std::vector<double> x) {
        TensorData t;
        t.shape = {x.size()};
        t.v = std::move(x);
        return t;
    }

    static TensorData from_matrix(const Matrix& m) {
        TensorData t;
        t.shape = {m.rows(), m.cols()};
        t.v = m.data();
        return t;
    }

    Matrix to_matrix() const {
        Matrix m(shape[0], shape.size() > 1 ? shape[1] : 1);
        m.data() = v;
        return m;
    }

    std::size_t size() const { return v.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }
};

} // namespace gesturelab::autodiff
