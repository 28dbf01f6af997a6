#include "zss/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "zss/prng.hpp"

namespace zss {

std::string shape_name(ShapeKind s) {
    switch (s) {
    case ShapeKind::Square: return "square";
    case ShapeKind::Disk: return "disk";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Stripe: return "stripe";
    }
    return "?";
}
std::string color_name(ColorKind c) {
    switch (c) {
    case ColorKind::R: return "r";
    case ColorKind::G: return "g";
    case ColorKind::B: return "b";
    }
    return "?";
}
std::string zone_name(ZoneKind z) {
    switch (z) {
    case ZoneKind::Top: return "top";
    case ZoneKind::Bottom: return "bottom";
    case ZoneKind::Any: return "any";
    }
    return "?";
}

namespace {

// embedding layout: [0,280) shape segment, [280,560) color segment,
// [560,563) zone one-hot (scaled), [563,600) per-class noise
constexpr std::size_t kShapeSeg = 280;
constexpr std::size_t kColorSeg = 280;
constexpr std::size_t kZoneSeg = 3;

std::vector<double> build_embedding(const ClassDef& cls, std::uint64_t seed) {
    std::vector<double> e(kEmbeddingDim, 0.0);
    if (!cls.is_background) {
        Prng ra = substream(seed, "embA", static_cast<std::uint64_t>(cls.shape));
        for (std::size_t i = 0; i < kShapeSeg; ++i) e[i] = ra.normal();
        Prng rb = substream(seed, "embB", static_cast<std::uint64_t>(cls.color));
        for (std::size_t i = 0; i < kColorSeg; ++i) e[kShapeSeg + i] = rb.normal();
    }
    e[kShapeSeg + kColorSeg + static_cast<std::size_t>(cls.zone)] = 5.0;
    Prng rn = substream(seed, "embN", static_cast<std::uint64_t>(cls.id));
    for (std::size_t i = kShapeSeg + kColorSeg + kZoneSeg; i < kEmbeddingDim; ++i)
        e[i] = 0.05 * rn.normal();
    double norm = 0.0;
    for (double v : e) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : e) v /= norm;
    return e;
}

} // namespace

ClassCatalog make_class_catalog(std::size_t n_seen, std::size_t n_unseen,
                                std::uint64_t seed) {
    if (n_seen < 4) throw InfeasibleSplit("need at least 4 seen classes");
    if (n_unseen < 1) throw InfeasibleSplit("need at least 1 unseen class");

    const ShapeKind shapes[] = {ShapeKind::Square, ShapeKind::Disk, ShapeKind::Triangle,
                                ShapeKind::Stripe};
    const ColorKind colors[] = {ColorKind::R, ColorKind::G, ColorKind::B};

    std::vector<std::pair<ShapeKind, ColorKind>> pool;
    for (auto s : shapes)
        for (auto c : colors)
            if (!(s == ShapeKind::Square && c == ColorKind::R)) // reserved for the zone pair
                pool.push_back({s, c});
    Prng rng = substream(seed, "catalog");
    for (std::size_t i = pool.size(); i > 1; --i)
        std::swap(pool[i - 1], pool[rng.below(i)]);

    ClassCatalog cat;
    cat.seed = seed;
    auto add = [&cat](const ClassDef& d, bool seen) {
        cat.classes.push_back(d);
        (seen ? cat.seen : cat.unseen).insert(d.id);
    };

    ClassDef bg;
    bg.id = 0;
    bg.name = "background";
    bg.is_background = true;
    bg.zone = ZoneKind::Any;
    add(bg, true);

    // positional-ambiguity pair: identical texture, different zone
    add({1, "square_r_top", false, ShapeKind::Square, ColorKind::R, ZoneKind::Top}, true);
    add({2, "square_r_bottom", false, ShapeKind::Square, ColorKind::R, ZoneKind::Bottom},
        true);

    // remaining seen classes: greedy for attribute diversity first
    std::set<ShapeKind> seen_shapes = {ShapeKind::Square};
    std::set<ColorKind> seen_colors = {ColorKind::R};
    std::vector<std::pair<ShapeKind, ColorKind>> rest;
    int next_id = 3;
    std::size_t seen_left = n_seen - 3;
    std::vector<std::pair<ShapeKind, ColorKind>> deferred;
    for (const auto& [s, c] : pool) {
        if (seen_left > 0 && (!seen_shapes.count(s) || !seen_colors.count(c))) {
            add({next_id++, shape_name(s) + "_" + color_name(c), false, s, c, ZoneKind::Any},
                true);
            seen_shapes.insert(s);
            seen_colors.insert(c);
            --seen_left;
        } else {
            deferred.push_back({s, c});
        }
    }
    for (const auto& [s, c] : deferred) {
        if (seen_left == 0) {
            rest.push_back({s, c});
            continue;
        }
        add({next_id++, shape_name(s) + "_" + color_name(c), false, s, c, ZoneKind::Any},
            true);
        seen_shapes.insert(s);
        seen_colors.insert(c);
        --seen_left;
    }
    if (seen_left > 0) throw InfeasibleSplit("attribute pool too small for n_seen");

    std::size_t unseen_left = n_unseen;
    for (const auto& [s, c] : rest) {
        if (unseen_left == 0) break;
        if (!seen_shapes.count(s) || !seen_colors.count(c)) continue; // not compositional
        add({next_id++, shape_name(s) + "_" + color_name(c), false, s, c, ZoneKind::Any},
            false);
        --unseen_left;
    }
    if (unseen_left > 0)
        throw InfeasibleSplit("cannot satisfy compositional coverage for n_unseen");

    for (const auto& cls : cat.classes)
        cat.embeddings.entries[cls.id] = build_embedding(cls, seed);
    return cat;
}

namespace {

void color_rgb(ColorKind c, float rgb[3]) {
    switch (c) {
    case ColorKind::R: rgb[0] = 0.85f; rgb[1] = 0.15f; rgb[2] = 0.15f; break;
    case ColorKind::G: rgb[0] = 0.15f; rgb[1] = 0.85f; rgb[2] = 0.15f; break;
    case ColorKind::B: rgb[0] = 0.15f; rgb[1] = 0.15f; rgb[2] = 0.85f; break;
    }
}

// pixel list of a shape instance, integer arithmetic only
std::vector<std::pair<std::size_t, std::size_t>> shape_pixels(ShapeKind kind, std::size_t y0,
                                                              std::size_t x0, std::size_t s,
                                                              std::size_t w) {
    std::vector<std::pair<std::size_t, std::size_t>> px;
    switch (kind) {
    case ShapeKind::Square:
        for (std::size_t y = 0; y < s; ++y)
            for (std::size_t x = 0; x < s; ++x) px.push_back({y0 + y, x0 + x});
        break;
    case ShapeKind::Disk: {
        long r = static_cast<long>(s) / 2;
        long cy = static_cast<long>(y0) + r, cx = static_cast<long>(x0) + r;
        for (long dy = -r; dy <= r; ++dy)
            for (long dx = -r; dx <= r; ++dx)
                if (dy * dy + dx * dx <= r * r)
                    px.push_back({static_cast<std::size_t>(cy + dy),
                                  static_cast<std::size_t>(cx + dx)});
        break;
    }
    case ShapeKind::Triangle:
        for (std::size_t y = 0; y < s; ++y) {
            std::size_t half = y / 2;
            std::size_t c = x0 + s / 2;
            for (std::size_t x = c - half; x <= c + half && x < x0 + s; ++x)
                px.push_back({y0 + y, x});
        }
        break;
    case ShapeKind::Stripe:
        // full-width horizontal bar
        for (std::size_t y = 0; y < s / 2 + 2; ++y)
            for (std::size_t x = 0; x < w; ++x) px.push_back({y0 + y, x});
        break;
    }
    return px;
}

} // namespace

Sample render_sample(const ClassCatalog& catalog, Split split, std::uint64_t index,
                     std::uint64_t seed, std::size_t h, std::size_t w) {
    Prng rng = substream(seed, "render", static_cast<std::uint64_t>(split), index);

    Sample out;
    out.h = h;
    out.w = w;
    out.labels = LabelMap(h, w, 0);
    out.image.assign(3 * h * w, 0.5f);

    std::vector<const ClassDef*> choices;
    for (const auto& cls : catalog.classes) {
        if (cls.is_background) continue;
        bool is_seen = catalog.seen.count(cls.id) != 0;
        if (split == Split::TrainSeen && !is_seen) continue;
        choices.push_back(&cls);
    }

    std::size_t plane = h * w;
    std::size_t n_regions = 1 + rng.below(3);
    for (std::size_t r = 0; r < n_regions; ++r) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const ClassDef& cls = *choices[rng.below(choices.size())];
            std::size_t s = 8 + rng.below(9); // base extent 8..16
            std::size_t sh = (cls.shape == ShapeKind::Stripe) ? s / 2 + 2 : s;
            std::size_t sw = (cls.shape == ShapeKind::Stripe) ? w : s;
            std::size_t ylo = 0, yhi = h; // bounding rows allowed
            if (cls.zone == ZoneKind::Top) yhi = h / 2;
            if (cls.zone == ZoneKind::Bottom) ylo = h / 2;
            if (yhi - ylo < sh || w < sw) continue;
            std::size_t y0 = ylo + rng.below(yhi - ylo - sh + 1);
            std::size_t x0 = (w == sw) ? 0 : rng.below(w - sw + 1);
            auto px = shape_pixels(cls.shape, y0, x0, s, w);
            bool free = true;
            for (auto [y, x] : px)
                if (out.labels.at(y, x) != 0) {
                    free = false;
                    break;
                }
            if (!free) continue;
            float rgb[3];
            color_rgb(cls.color, rgb);
            for (auto [y, x] : px) {
                out.labels.at(y, x) = cls.id;
                for (int c = 0; c < 3; ++c)
                    out.image[c * plane + y * w + x] = rgb[c];
            }
            if (catalog.unseen.count(cls.id)) out.has_unseen = true;
            placed = true;
        }
        // placement failure after 100 attempts: render fewer regions
    }

    for (auto& v : out.image) {
        v += static_cast<float>(0.02 * rng.normal());
        v = std::min(1.0f, std::max(0.0f, v));
    }
    return out;
}

EmbeddingTable load_embedding_file(const std::string& path,
                                   const std::map<std::string, std::string>& aliases,
                                   const std::vector<std::string>& class_order,
                                   std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw ValueError("cannot open embedding file: " + path);

    std::map<std::string, std::vector<double>> sums;
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> first_seen;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (tokens.size() < dim + 1)
            throw ValueError("embedding file line " + std::to_string(line_no) + ": expected " +
                             std::to_string(dim) + " values, got " +
                             std::to_string(tokens.size() > 0 ? tokens.size() - 1 : 0));
        std::size_t name_tokens = tokens.size() - dim;
        std::vector<double> vals(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            try {
                vals[i] = std::stod(tokens[name_tokens + i]);
            } catch (const std::exception&) {
                throw ValueError("embedding file line " + std::to_string(line_no) +
                                 ": bad value '" + tokens[name_tokens + i] + "'");
            }
        }
        std::string name = tokens[0];
        for (std::size_t i = 1; i < name_tokens; ++i) name += " " + tokens[i];
        auto it = aliases.find(name);
        if (it != aliases.end()) name = it->second;
        if (!sums.count(name)) {
            sums[name].assign(dim, 0.0);
            first_seen.push_back(name);
        }
        for (std::size_t i = 0; i < dim; ++i) sums[name][i] += vals[i];
        counts[name] += 1;
    }

    EmbeddingTable table;
    table.dim = dim;
    auto emit = [&](const std::string& name, int id) {
        auto& v = sums[name];
        double n = static_cast<double>(counts[name]);
        for (auto& x : v) x /= n;
        table.entries[id] = v;
    };
    if (class_order.empty()) {
        int id = 0;
        for (const auto& name : first_seen) emit(name, id++);
    } else {
        for (std::size_t id = 0; id < class_order.size(); ++id)
            if (sums.count(class_order[id])) emit(class_order[id], static_cast<int>(id));
    }
    return table;
}

} // namespace zss
