#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace asmap {

// Dense row-major tensor, up to 4 dims.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)),
          data(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; }),
               0.0) {}

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t size() const { return data.size(); }

    std::size_t dim(std::size_t i) const { return i < shape.size() ? shape[i] : 1; }

    // 3-D accessor [c][h][w]
    double& at3(std::size_t c, std::size_t h, std::size_t w) {
        return data[(c * shape[1] + h) * shape[2] + w];
    }
    double at3(std::size_t c, std::size_t h, std::size_t w) const {
        return data[(c * shape[1] + h) * shape[2] + w];
    }
    // 4-D accessor [o][c][h][w]
    double& at4(std::size_t o, std::size_t c, std::size_t h, std::size_t w) {
        return data[((o * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    double at4(std::size_t o, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((o * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
};

inline bool has_non_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return true;
    return false;
}

}  // namespace asmap
