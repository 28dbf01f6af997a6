#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "zss/tensor.hpp"

namespace zss {

struct FdReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    bool pass = true;
};

// Compares the reverse-mode gradient of fn at `point` against central finite
// differences, coordinate by coordinate. Meant to run on double tensors.
inline FdReport finite_difference_check(
    const std::function<Tensor<double>(const Tensor<double>&)>& fn,
    const Tensor<double>& point, double rel_tol = 1e-3, double abs_tol = 1e-5,
    double h = 1e-5) {
    Tensor<double> x = Tensor<double>::leaf(point.shape(), point.data(), true);
    Tensor<double> loss = fn(x);
    backward(loss);
    std::vector<double> analytic = x.grad().empty()
                                       ? std::vector<double>(x.numel(), 0.0)
                                       : x.grad();

    FdReport rep;
    std::vector<double> base = point.data();
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> dp = base, dm = base;
        dp[i] += h;
        dm[i] -= h;
        NoGradGuard ng;
        double fp = fn(Tensor<double>::leaf(point.shape(), dp)).item();
        double fm = fn(Tensor<double>::leaf(point.shape(), dm)).item();
        double numeric = (fp - fm) / (2.0 * h);
        double a = analytic[i];
        double abs_err = std::abs(a - numeric);
        double rel_err = abs_err / std::max(std::abs(numeric), 1e-300);
        rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
        rep.max_rel_err = std::max(rep.max_rel_err, rel_err);
        if (abs_err > abs_tol + rel_tol * std::abs(numeric)) rep.pass = false;
    }
    return rep;
}

} // namespace zss
