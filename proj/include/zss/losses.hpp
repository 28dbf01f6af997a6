#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "zss/labelmap.hpp"
#include "zss/tensor.hpp"

namespace zss {

struct LossWeights {
    double alpha = 100.0;
    double beta = 50.0;
    double temperature = 2.0;
};

// KL(N(mu, exp(logvar)) || N(0,1)), averaged over latent sites
template <class T>
Tensor<T> kld_standard_normal(const Tensor<T>& mu, const Tensor<T>& logvar) {
    if (mu.shape() != logvar.shape())
        throw ShapeError("kld: mu/logvar shape mismatch");
    for (T v : mu.data())
        if (!std::isfinite(static_cast<double>(v))) throw ValueError("kld: non-finite mu");
    for (T v : logvar.data())
        if (!std::isfinite(static_cast<double>(v))) throw ValueError("kld: non-finite logvar");
    // -1/2 * (1 + logvar - mu^2 - exp(logvar))
    Tensor<T> term = add_const(logvar, T(1)) - mul(mu, mu) - zss::exp(logvar);
    return scale(mean(term), T(-0.5));
}

struct CeResult {
    std::size_t support = 0; // number of contributing pixels; 0 flags empty support
};

// Weighted mean over non-ignore pixels of -log softmax(logits)[y].
// Weights default to 1; normalization is by the weight sum, so unit weights
// reproduce the unweighted mean exactly.
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const LabelMap& y,
                        const std::vector<T>& pixel_weights = {},
                        CeResult* result = nullptr) {
    if (logits.rank() != 3) throw ShapeError("cross_entropy expects logits [K,H,W]");
    std::size_t k = logits.shape()[0], h = logits.shape()[1], w = logits.shape()[2];
    if (y.h != h || y.w != w) throw ShapeError("cross_entropy label extent mismatch");
    if (!pixel_weights.empty() && pixel_weights.size() != h * w)
        throw ShapeError("cross_entropy pixel_weights size mismatch");
    std::size_t plane = h * w;
    const auto& lv = logits.data();

    // per-pixel softmax (shift-stable) and loss accumulation
    std::vector<T> probs(lv.size());
    T loss_acc = T(0), weight_acc = T(0);
    std::size_t support = 0;
    for (std::size_t p = 0; p < plane; ++p) {
        int cls = y.ids[p];
        T mx = lv[p];
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, lv[c * plane + p]);
        T denom = T(0);
        for (std::size_t c = 0; c < k; ++c) {
            T e = std::exp(lv[c * plane + p] - mx);
            probs[c * plane + p] = e;
            denom += e;
        }
        for (std::size_t c = 0; c < k; ++c) probs[c * plane + p] /= denom;
        if (cls == LabelMap::kIgnore) continue;
        if (cls < 0 || static_cast<std::size_t>(cls) >= k)
            throw ValueError("cross_entropy: class id " + std::to_string(cls) +
                             " out of range for K=" + std::to_string(k));
        T wgt = pixel_weights.empty() ? T(1) : pixel_weights[p];
        loss_acc += wgt * -std::log(probs[static_cast<std::size_t>(cls) * plane + p]);
        weight_acc += wgt;
        ++support;
    }
    if (result) result->support = support;
    if (support == 0 || weight_acc == T(0))
        return Tensor<T>::scalar(T(0));

    T value = loss_acc / weight_acc;
    auto ln = logits.node_ptr();
    std::vector<int> labels = y.ids;
    std::vector<T> wts = pixel_weights;
    return make_op<T>(
        {1}, {value}, {logits},
        [ln, labels, wts, probs, weight_acc, k, plane](TensorNode<T>* self) {
            ln->ensure_grad();
            T g = self->grad[0] / weight_acc;
            for (std::size_t p = 0; p < plane; ++p) {
                int cls = labels[p];
                if (cls == LabelMap::kIgnore) continue;
                T wgt = wts.empty() ? T(1) : wts[p];
                if (wgt == T(0)) continue;
                for (std::size_t c = 0; c < k; ++c) {
                    T d = probs[c * plane + p];
                    if (c == static_cast<std::size_t>(cls)) d -= T(1);
                    ln->grad[c * plane + p] += g * wgt * d;
                }
            }
        });
}

// Biased-estimator MMD with unit-bandwidth Gaussian kernel, summed over seen
// classes present in y. real/fake columns for class c are the per-pixel
// feature vectors at c-labeled pixels.
template <class T>
Tensor<T> mmd_loss(const Tensor<T>& real, const Tensor<T>& fake, const LabelMap& y,
                   const std::set<int>& seen) {
    if (real.shape() != fake.shape())
        throw ShapeError("mmd_loss: real/fake shape mismatch");
    if (real.rank() != 3) throw ShapeError("mmd_loss expects [C,H,W]");
    std::size_t ch = real.shape()[0], h = real.shape()[1], w = real.shape()[2];
    if (y.h != h || y.w != w) throw ShapeError("mmd_loss label extent mismatch");
    std::size_t plane = h * w;

    std::vector<std::vector<std::size_t>> groups;
    for (int c : seen) {
        std::vector<std::size_t> px;
        for (std::size_t p = 0; p < plane; ++p)
            if (y.ids[p] == c) px.push_back(p);
        if (!px.empty()) groups.push_back(std::move(px));
    }

    const auto& rv = real.data();
    const auto& fv = fake.data();
    auto col = [&, plane, ch](const std::vector<T>& v, std::size_t p, std::vector<T>& out) {
        for (std::size_t c = 0; c < ch; ++c) out[c] = v[c * plane + p];
    };
    auto kern = [ch](const std::vector<T>& a, const std::vector<T>& b) {
        T d2 = T(0);
        for (std::size_t c = 0; c < ch; ++c) {
            T d = a[c] - b[c];
            d2 += d * d;
        }
        return std::exp(T(-0.5) * d2);
    };

    T total = T(0);
    std::vector<T> fa(ch), fb(ch);
    for (const auto& px : groups) {
        std::size_t n = px.size();
        T rr = T(0), ff = T(0), rf = T(0);
        for (std::size_t i = 0; i < n; ++i) {
            col(rv, px[i], fa);
            for (std::size_t j = 0; j < n; ++j) {
                col(rv, px[j], fb);
                rr += kern(fa, fb);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            col(fv, px[i], fa);
            for (std::size_t j = 0; j < n; ++j) {
                col(fv, px[j], fb);
                ff += kern(fa, fb);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            col(rv, px[i], fa);
            for (std::size_t j = 0; j < n; ++j) {
                col(fv, px[j], fb);
                rf += kern(fa, fb);
            }
        }
        T inv = T(1) / (T(n) * T(n));
        total += inv * rr + inv * ff - T(2) * inv * rf;
    }

    auto rn = real.node_ptr();
    auto fn = fake.node_ptr();
    return make_op<T>(
        {1}, {total}, {real, fake},
        [rn, fn, groups, ch, plane](TensorNode<T>* self) {
            bool nr = rn->requires_grad, nf = fn->requires_grad;
            if (nr) rn->ensure_grad();
            if (nf) fn->ensure_grad();
            T g = self->grad[0];
            std::vector<T> a(ch), b(ch);
            auto col = [plane, ch](const std::vector<T>& v, std::size_t p, std::vector<T>& out) {
                for (std::size_t c = 0; c < ch; ++c) out[c] = v[c * plane + p];
            };
            auto kern = [ch](const std::vector<T>& x, const std::vector<T>& y2) {
                T d2 = T(0);
                for (std::size_t c = 0; c < ch; ++c) {
                    T d = x[c] - y2[c];
                    d2 += d * d;
                }
                return std::exp(T(-0.5) * d2);
            };
            for (const auto& px : groups) {
                std::size_t n = px.size();
                T inv = T(1) / (T(n) * T(n));
                for (std::size_t i = 0; i < n; ++i) {
                    if (nr) {
                        col(rn->value, px[i], a);
                        for (std::size_t j = 0; j < n; ++j) {
                            // d/da of k(a, r_j), counted for both pair orders
                            col(rn->value, px[j], b);
                            T kk = kern(a, b);
                            for (std::size_t c = 0; c < ch; ++c)
                                rn->grad[c * plane + px[i]] +=
                                    g * T(2) * inv * kk * (b[c] - a[c]);
                            // cross term
                            col(fn->value, px[j], b);
                            kk = kern(a, b);
                            for (std::size_t c = 0; c < ch; ++c)
                                rn->grad[c * plane + px[i]] -=
                                    g * T(2) * inv * kk * (b[c] - a[c]);
                        }
                    }
                    if (nf) {
                        col(fn->value, px[i], a);
                        for (std::size_t j = 0; j < n; ++j) {
                            col(fn->value, px[j], b);
                            T kk = kern(a, b);
                            for (std::size_t c = 0; c < ch; ++c)
                                fn->grad[c * plane + px[i]] +=
                                    g * T(2) * inv * kk * (b[c] - a[c]);
                            col(rn->value, px[j], b);
                            kk = kern(a, b);
                            for (std::size_t c = 0; c < ch; ++c)
                                fn->grad[c * plane + px[i]] -=
                                    g * T(2) * inv * kk * (b[c] - a[c]);
                        }
                    }
                }
            }
        });
}

template <class T>
struct AdvLosses {
    Tensor<T> d_objective; // L_adv; the discriminator ascends this
    Tensor<T> g_objective; // E[log(1 - D(fake))]; the generator descends this
};

inline constexpr double kProbClamp = 1e-7;

// Original minimax GAN objective on per-pixel probabilities; inputs are
// clamped away from {0,1} before the logs.
template <class T>
AdvLosses<T> adversarial_losses(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
    Tensor<T> dr = clamp(d_real, T(kProbClamp), T(1.0 - kProbClamp));
    Tensor<T> df = clamp(d_fake, T(kProbClamp), T(1.0 - kProbClamp));
    Tensor<T> one_minus_df = add_const(scale(df, T(-1)), T(1));
    Tensor<T> g_obj = mean(zss::log(one_minus_df));
    Tensor<T> d_obj = mean(zss::log(dr)) + g_obj;
    return {d_obj, g_obj};
}

// Annealed loss weights, Z-normalized so the most confident pixel gets
// weight exactly 1: w_i = exp((p_i - max_j p_j) / T).
template <class T>
std::vector<T> ast_weights(const std::vector<T>& confidence, double temperature) {
    if (temperature <= 0.0) throw ValueError("ast_weights: temperature must be > 0");
    if (confidence.empty()) return {};
    T mx = *std::max_element(confidence.begin(), confidence.end());
    std::vector<T> out(confidence.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<T>(std::exp((static_cast<double>(confidence[i]) -
                                          static_cast<double>(mx)) /
                                         temperature));
    return out;
}

// Keep the ceil(keep_fraction * N) most confident pixels; ties broken by
// row-major index, lower index first.
template <class T>
std::vector<char> st_mask(const std::vector<T>& confidence, double keep_fraction) {
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
        throw ValueError("st_mask: keep_fraction must be in (0,1]");
    std::size_t n = confidence.size();
    std::vector<char> mask(n, 0);
    if (n == 0) return mask; // empty pseudo-label set
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(n)));
    keep = std::min(keep, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&confidence](std::size_t a, std::size_t b) {
        return confidence[a] > confidence[b];
    });
    for (std::size_t i = 0; i < keep; ++i) mask[idx[i]] = 1;
    return mask;
}

} // namespace zss
