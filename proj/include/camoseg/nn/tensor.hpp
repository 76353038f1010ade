#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camoseg/error.hpp"

namespace camoseg::nn {

// Dense row-major tensor of doubles. Rank is at most 4 in this codebase.
// Value semantics throughout; copies are explicit and cheap at desk scale.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(static_cast<size_t>(count(shape)), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
        check_contract(static_cast<int64_t>(v.size()) == count(shape), "tensor data/shape mismatch");
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            check_contract(d >= 0, "negative tensor dim");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, double x) {
        Tensor t(std::move(s));
        for (auto& e : t.v) e = x;
        return t;
    }
    static Tensor scalar(double x) { return Tensor({1}, {x}); }

    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    double& operator[](int64_t i) { return v[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return v[static_cast<size_t>(i)]; }

    double& at(int i) { return v[static_cast<size_t>(i)]; }
    double& at(int i, int j) { return v[static_cast<size_t>(i) * shape[1] + j]; }
    double& at(int i, int j, int k) {
        return v[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double& at(int i, int j, int k, int l) {
        return v[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double at(int i) const { return v[static_cast<size_t>(i)]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * shape[1] + j]; }
    double at(int i, int j, int k) const {
        return v[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at(int i, int j, int k, int l) const {
        return v[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    Tensor reshaped(std::vector<int> s) const {
        check_contract(count(s) == numel(), "reshape numel mismatch");
        return Tensor(std::move(s), v);
    }

    std::string shape_str() const {
        std::string r = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) r += ",";
            r += std::to_string(shape[i]);
        }
        return r + "]";
    }
};

}  // namespace camoseg::nn
