#pragma once

#include <array>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdraw::autograd {

/// Shape of a dense tensor, rank 0 (scalar) through 3. Fixed-size storage so
/// tensors stay allocation-light on the hot path.
struct Shape {
    int rank = 0;
    std::array<std::size_t, 3> dims{1, 1, 1};

    Shape() = default;
    Shape(std::initializer_list<std::size_t> ds) {
        if (ds.size() > 3)
            throw std::invalid_argument("Shape: rank must be <= 3");
        rank = static_cast<int>(ds.size());
        int i = 0;
        for (std::size_t d : ds)
            dims[static_cast<std::size_t>(i++)] = d;
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (int i = 0; i < rank; ++i)
            n *= dims[static_cast<std::size_t>(i)];
        return n;
    }

    bool operator==(const Shape &o) const {
        if (rank != o.rank)
            return false;
        for (int i = 0; i < rank; ++i)
            if (dims[static_cast<std::size_t>(i)] != o.dims[static_cast<std::size_t>(i)])
                return false;
        return true;
    }
    bool operator!=(const Shape &o) const { return !(*this == o); }

    std::string str() const {
        char buf[80];
        int len = std::snprintf(buf, sizeof buf, "[");
        for (int i = 0; i < rank; ++i)
            len += std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len),
                                 i ? "x%zu" : "%zu", dims[static_cast<std::size_t>(i)]);
        std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len), "]");
        return buf;
    }
};

/// Dense real tensor, row-major.
struct Tensor {
    Shape shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), v(s.numel(), fill) {}
    Tensor(Shape s, std::vector<double> data) : shape(s), v(std::move(data)) {
        if (v.size() != shape.numel())
            throw std::invalid_argument("Tensor: data size " + std::to_string(v.size()) +
                                        " does not match shape " + shape.str());
    }

    static Tensor scalar(double x) { return Tensor(Shape{}, std::vector<double>{x}); }
    static Tensor vector(std::vector<double> data) {
        const std::size_t n = data.size();
        return Tensor(Shape{n}, std::move(data));
    }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
        return Tensor(Shape{rows, cols}, std::move(data));
    }
    static Tensor zeros(Shape s) { return Tensor(s); }

    std::size_t numel() const { return v.size(); }
    std::size_t rows() const { return shape.dims[0]; }
    std::size_t cols() const { return shape.dims[1]; }

    double &operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    double &at(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols() + c]; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline void check_same_shape(const Tensor &a, const Tensor &b, const char *op) {
    if (a.shape != b.shape)
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape.str() +
                                    " vs " + b.shape.str());
}

} // namespace qdraw::autograd
