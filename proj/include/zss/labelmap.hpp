#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace zss {

// H x W integer class-id field. kIgnore pixels are excluded from losses and
// metrics.
struct LabelMap {
    static constexpr int kIgnore = 255;

    std::size_t h = 0, w = 0;
    std::vector<int> ids; // row-major, size h*w

    LabelMap() = default;
    LabelMap(std::size_t h_, std::size_t w_, int fill = kIgnore)
        : h(h_), w(w_), ids(h_ * w_, fill) {}

    std::size_t size() const { return ids.size(); }
    int at(std::size_t y, std::size_t x) const { return ids[y * w + x]; }
    int& at(std::size_t y, std::size_t x) { return ids[y * w + x]; }

    bool operator==(const LabelMap& o) const { return h == o.h && w == o.w && ids == o.ids; }
};

// nearest (center-of-block) downsample by an integer factor
inline LabelMap downsample_labels(const LabelMap& m, std::size_t factor) {
    if (factor == 0 || m.h % factor || m.w % factor)
        throw std::invalid_argument("downsample_labels: extents not divisible by factor");
    LabelMap out(m.h / factor, m.w / factor);
    for (std::size_t y = 0; y < out.h; ++y)
        for (std::size_t x = 0; x < out.w; ++x)
            out.at(y, x) = m.at(y * factor + factor / 2, x * factor + factor / 2);
    return out;
}

} // namespace zss
