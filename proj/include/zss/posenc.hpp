#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "zss/tensor.hpp"

namespace zss {

enum class PeMode { None, Rpe, Ape, ApeInterp };

inline constexpr std::size_t kPeDModel = 300; // per direction
inline constexpr double kPeScale = 512.0;     // relative-position constant c

// c * pos / extent
inline double relative_position(std::size_t pos, std::size_t extent, double c = kPeScale) {
    if (extent < 1) throw ValueError("relative_position: extent must be >= 1");
    if (pos >= extent)
        throw ValueError("relative_position: pos " + std::to_string(pos) +
                         " outside [0, " + std::to_string(extent) + ")");
    if (c <= 0.0) throw ValueError("relative_position: c must be > 0");
    return c * static_cast<double>(pos) / static_cast<double>(extent);
}

// interleaved sin/cos vector: out[2d] = sin(p / 10000^(2d/d_model)),
// out[2d+1] = cos(same)
inline std::vector<double> sinusoid_vector(double pos_star, std::size_t d_model = kPeDModel) {
    if (d_model % 2 != 0) throw ValueError("sinusoid_vector: d_model must be even");
    std::vector<double> out(d_model);
    for (std::size_t d = 0; d + 1 < d_model; d += 2) {
        double arg = pos_star / std::pow(10000.0, static_cast<double>(d) /
                                                      static_cast<double>(d_model));
        out[d] = std::sin(arg);
        out[d + 1] = std::cos(arg);
    }
    return out;
}

// Channels [0, d_model) encode horizontal position, [d_model, 2*d_model)
// vertical. Values carry no differentiation record.
template <class T>
struct PeMap {
    PeMode mode = PeMode::Rpe;
    std::size_t d_model = kPeDModel;
    double c = kPeScale;
    Tensor<T> values; // [2*d_model, H, W]
};

template <class T>
PeMap<T> build_pe_map(std::size_t h, std::size_t w, PeMode mode,
                      std::optional<std::pair<std::size_t, std::size_t>> train_size = {},
                      std::size_t d_model = kPeDModel, double c = kPeScale) {
    if (h < 1 || w < 1) throw ValueError("build_pe_map: extents must be >= 1");
    if (mode == PeMode::ApeInterp && !train_size)
        throw ValueError("build_pe_map: APE_INTERP requires a train_size");

    auto fill = [d_model, c](std::size_t hh, std::size_t ww, bool relative) {
        std::vector<T> vals(2 * d_model * hh * ww, T(0));
        std::size_t plane = hh * ww;
        // horizontal direction shares a vector per column, vertical per row
        std::vector<std::vector<double>> col(ww), row(hh);
        for (std::size_t u = 0; u < ww; ++u)
            col[u] = sinusoid_vector(relative ? relative_position(u, ww, c)
                                              : static_cast<double>(u),
                                     d_model);
        for (std::size_t v = 0; v < hh; ++v)
            row[v] = sinusoid_vector(relative ? relative_position(v, hh, c)
                                              : static_cast<double>(v),
                                     d_model);
        for (std::size_t d = 0; d < d_model; ++d)
            for (std::size_t v = 0; v < hh; ++v)
                for (std::size_t u = 0; u < ww; ++u) {
                    vals[d * plane + v * ww + u] = static_cast<T>(col[u][d]);
                    vals[(d_model + d) * plane + v * ww + u] = static_cast<T>(row[v][d]);
                }
        return Tensor<T>::leaf({2 * d_model, hh, ww}, std::move(vals));
    };

    PeMap<T> map;
    map.mode = mode;
    map.d_model = d_model;
    map.c = c;
    switch (mode) {
    case PeMode::None:
        map.values = Tensor<T>::zeros({2 * d_model, h, w});
        break;
    case PeMode::Rpe:
        map.values = fill(h, w, true);
        break;
    case PeMode::Ape:
        map.values = fill(h, w, false);
        break;
    case PeMode::ApeInterp: {
        Tensor<T> base = fill(train_size->first, train_size->second, false);
        NoGradGuard ng;
        map.values = bilinear_resize(base, h, w);
        break;
    }
    }
    return map;
}

} // namespace zss
