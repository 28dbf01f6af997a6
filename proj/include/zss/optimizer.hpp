#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "zss/tensor.hpp"

namespace zss {

enum class OptMode { SgdPoly, Adam };

// SGD with poly learning-rate decay, or bias-corrected Adam. One instance
// owns one parameter list; moments are allocated lazily for Adam.
template <class T>
class Optimizer {
public:
    Optimizer(OptMode mode, T base_lr, std::vector<Tensor<T>> params,
              long total_steps = 0, T poly_power = T(0.9))
        : mode_(mode), base_lr_(base_lr), total_steps_(total_steps),
          poly_power_(poly_power), params_(std::move(params)) {
        if (base_lr <= T(0)) throw ValueError("optimizer base_lr must be > 0");
        if (mode_ == OptMode::Adam) {
            m_.resize(params_.size());
            v_.resize(params_.size());
            for (std::size_t i = 0; i < params_.size(); ++i) {
                m_[i].assign(params_[i].numel(), T(0));
                v_[i].assign(params_[i].numel(), T(0));
            }
        }
    }

    void step() {
        if (mode_ == OptMode::SgdPoly) {
            if (step_count_ >= total_steps_)
                throw ValueError("SGD_POLY step_count would exceed total_steps (" +
                                 std::to_string(total_steps_) + ")");
            T lr = effective_lr();
            for (auto& p : params_) {
                if (p.grad().empty()) continue;
                auto& d = p.mutable_data();
                const auto& g = p.grad();
                for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr * g[i];
            }
            ++step_count_;
        } else {
            ++step_count_;
            T t = T(step_count_);
            T bc1 = T(1) - std::pow(beta1_, t);
            T bc2 = T(1) - std::pow(beta2_, t);
            for (std::size_t pi = 0; pi < params_.size(); ++pi) {
                auto& p = params_[pi];
                if (p.grad().empty()) continue;
                auto& d = p.mutable_data();
                const auto& g = p.grad();
                auto& m = m_[pi];
                auto& v = v_[pi];
                for (std::size_t i = 0; i < d.size(); ++i) {
                    m[i] = beta1_ * m[i] + (T(1) - beta1_) * g[i];
                    v[i] = beta2_ * v[i] + (T(1) - beta2_) * g[i] * g[i];
                    T mh = m[i] / bc1;
                    T vh = v[i] / bc2;
                    d[i] -= base_lr_ * mh / (std::sqrt(vh) + eps_);
                }
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    T effective_lr() const {
        if (mode_ == OptMode::Adam) return base_lr_;
        return base_lr_ * std::pow(T(1) - T(step_count_) / T(total_steps_), poly_power_);
    }

    OptMode mode() const { return mode_; }
    long step_count() const { return step_count_; }
    void set_step_count(long c) { step_count_ = c; }
    long total_steps() const { return total_steps_; }
    const std::vector<Tensor<T>>& params() const { return params_; }

    std::vector<std::vector<T>>& moments_m() { return m_; }
    std::vector<std::vector<T>>& moments_v() { return v_; }

private:
    OptMode mode_;
    T base_lr_;
    long step_count_ = 0;
    long total_steps_;
    T poly_power_;
    T beta1_ = T(0.9), beta2_ = T(0.999), eps_ = T(1e-8);
    std::vector<Tensor<T>> params_;
    std::vector<std::vector<T>> m_, v_;
};

} // namespace zss
