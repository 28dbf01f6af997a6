#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zss/labelmap.hpp"
#include "zss/networks.hpp"

namespace zss {

enum class ShapeKind { Square, Disk, Triangle, Stripe };
enum class ColorKind { R, G, B };
enum class ZoneKind { Top, Bottom, Any };

struct ClassDef {
    int id = 0;
    std::string name;
    bool is_background = false;
    ShapeKind shape = ShapeKind::Square;
    ColorKind color = ColorKind::R;
    ZoneKind zone = ZoneKind::Any;
};

struct ClassCatalog {
    std::vector<ClassDef> classes; // ids are 0..K-1, 0 = background
    EmbeddingTable embeddings;
    std::set<int> seen;
    std::set<int> unseen;
    std::uint64_t seed = 0;

    std::size_t num_classes() const { return classes.size(); }
};

struct InfeasibleSplit : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Deterministic catalog with attribute-compositional embeddings. Guarantees:
// every unseen (shape,color) pair has both attributes individually present
// among seen classes, and the seen set contains a top/bottom pair sharing
// (shape,color) — the positional-ambiguity pair.
ClassCatalog make_class_catalog(std::size_t n_seen, std::size_t n_unseen,
                                std::uint64_t seed);

enum class Split { TrainSeen, UnlabeledMixed, Test };

struct Sample {
    std::vector<float> image; // [3,H,W] row-major, values in [0,1]
    std::size_t h = 0, w = 0;
    LabelMap labels;
    bool has_unseen = false;
};

// Fully determined by (catalog, split, index, seed).
Sample render_sample(const ClassCatalog& catalog, Split split, std::uint64_t index,
                     std::uint64_t seed, std::size_t h = 32, std::size_t w = 32);

// Text embedding file: per line, name token(s) then exactly `dim` reals.
// `aliases` maps a file-name to a catalog class name; lines mapping to the
// same class are averaged (the multi-word-category rule).
EmbeddingTable load_embedding_file(const std::string& path,
                                   const std::map<std::string, std::string>& aliases = {},
                                   const std::vector<std::string>& class_order = {},
                                   std::size_t dim = kEmbeddingDim);

std::string shape_name(ShapeKind s);
std::string color_name(ColorKind c);
std::string zone_name(ZoneKind z);

} // namespace zss
