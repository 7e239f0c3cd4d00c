#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace genreforge {

// Dense row-major real array tagged with its shape. Compute runs in double;
// on-disk formats narrow to float32.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    static std::size_t numel_of(const std::vector<std::size_t>& shape);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void zero();

    // [b, c] and [b, c, t] accessors for non-hot-path code.
    double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at3(std::size_t b, std::size_t c, std::size_t t) {
        return data[(b * shape[1] + c) * shape[2] + t];
    }
    double at3(std::size_t b, std::size_t c, std::size_t t) const {
        return data[(b * shape[1] + c) * shape[2] + t];
    }
};

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace genreforge
