// Dense row-major tensor. Training runs in 32-bit floats, verification mode
// in 64-bit doubles; everything downstream is templated on the scalar type.
#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "xrid/error.hpp"

namespace xrid {

template <typename S>
struct Tensor {
    std::vector<int> shape;
    std::vector<S> values;
    std::vector<S> grad; // empty until ensure_grad()

    Tensor() = default;
    explicit Tensor(std::vector<int> dims) : shape(std::move(dims)) {
        values.assign(count(shape), S(0));
    }

    static std::size_t count(const std::vector<int>& dims) {
        std::size_t n = 1;
        for (int d : dims) {
            if (d < 0) throw ShapeError("negative dimension " + std::to_string(d));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return values.size(); }
    int dim(std::size_t i) const { return shape.at(i); }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), S(0));
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), S(0));
    }

    S* data() { return values.data(); }
    const S* data() const { return values.data(); }
};

// Named view over one parameter tensor, consumed by the optimizer and the
// checkpoint writer.
template <typename S>
struct ParamRef {
    std::string name;
    Tensor<S>* tensor = nullptr;
};

inline std::string shape_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

inline void require_shape(const std::vector<int>& actual, const std::vector<int>& expected,
                          const std::string& what) {
    if (actual != expected) {
        throw ShapeError(what + ": expected " + shape_string(expected) + ", got " +
                         shape_string(actual));
    }
}

} // namespace xrid
