#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "demandscope/common.hpp"

namespace demandscope {

// Dense row-major tensor. Activations use [N,C,H,W] for spatial data and
// [N,D] for vectors; weights use [O,I,K,K] / [O,I].
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), T(0)) {}
    Tensor(std::vector<int> s, T fill) : shape(std::move(s)), v(count(shape), fill) {}

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(v.size()); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    // [N,D]
    T& at2(int n, int d) { return v[static_cast<size_t>(n) * shape[1] + d]; }
    T at2(int n, int d) const { return v[static_cast<size_t>(n) * shape[1] + d]; }

    // [N,C,H,W]
    T& at4(int n, int c, int y, int x) {
        return v[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    T at4(int n, int c, int y, int x) const {
        return v[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

inline bool same_shape(const std::vector<int>& a, const std::vector<int>& b) { return a == b; }

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<int>& s, const char* what) {
    if (!same_shape(t.shape, s)) {
        std::string msg = what;
        msg += " expected [";
        for (size_t i = 0; i < s.size(); ++i) msg += (i ? "," : "") + std::to_string(s[i]);
        msg += "] got [";
        for (size_t i = 0; i < t.shape.size(); ++i)
            msg += (i ? "," : "") + std::to_string(t.shape[i]);
        msg += "]";
        throw ShapeMismatch(msg);
    }
}

}  // namespace demandscope
