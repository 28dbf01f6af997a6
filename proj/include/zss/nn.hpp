#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "zss/prng.hpp"
#include "zss/tensor.hpp"

namespace zss {

template <class T>
struct NamedParam {
    std::string name;
    Tensor<T> tensor;
};

template <class T>
Tensor<T> he_init(Shape shape, std::size_t fan_in, Prng& rng) {
    std::vector<T> d(numel_of(shape));
    double s = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : d) v = static_cast<T>(rng.normal() * s);
    return Tensor<T>::leaf(std::move(shape), std::move(d), true);
}

template <class T>
struct Conv2dLayer {
    Tensor<T> weight; // [Co,Ci,k,k]
    Tensor<T> bias;   // [Co,1,1]
    std::size_t stride = 1, padding = 0;

    Conv2dLayer() = default;
    Conv2dLayer(std::size_t co, std::size_t ci, std::size_t k, Prng& rng,
                std::size_t stride_ = 1, std::size_t padding_ = 0, bool zero = false)
        : stride(stride_), padding(padding_) {
        weight = zero ? Tensor<T>::zeros({co, ci, k, k}, true)
                      : he_init<T>({co, ci, k, k}, ci * k * k, rng);
        bias = Tensor<T>::zeros({co, 1, 1}, true);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        return conv2d(x, weight, stride, padding) + bias;
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        out.push_back({prefix + "/w", weight});
        out.push_back({prefix + "/b", bias});
    }
};

template <class T>
struct LinearLayer {
    Tensor<T> weight; // [out,in]
    Tensor<T> bias;   // [out,1]

    LinearLayer() = default;
    LinearLayer(std::size_t out, std::size_t in, Prng& rng, bool zero = false) {
        weight = zero ? Tensor<T>::zeros({out, in}, true) : he_init<T>({out, in}, in, rng);
        bias = Tensor<T>::zeros({out, 1}, true);
    }

    // x: [in, N] -> [out, N]
    Tensor<T> forward(const Tensor<T>& x) const { return matmul(weight, x) + bias; }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        out.push_back({prefix + "/w", weight});
        out.push_back({prefix + "/b", bias});
    }
};

template <class T>
std::vector<Tensor<T>> tensors_of(const std::vector<NamedParam<T>>& named) {
    std::vector<Tensor<T>> out;
    out.reserve(named.size());
    for (const auto& p : named) out.push_back(p.tensor);
    return out;
}

} // namespace zss
