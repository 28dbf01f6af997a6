#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "zss/labelmap.hpp"

namespace zss {

// K x K pixel-count accumulator; rows = ground truth, cols = prediction.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

    std::size_t num_classes() const { return k_; }
    std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * k_ + pred]; }
    std::uint64_t total() const;

    void accumulate(const LabelMap& pred, const LabelMap& gt);
    void merge(const ConfusionMatrix& other);

    // TP / (TP + FP + FN); false when the class has zero union
    bool class_iou(std::size_t c, double& iou) const;

private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

struct MiouResult {
    double miou = 0.0;
    bool defined = false;
    std::vector<int> zero_union_classes; // excluded from the mean
    std::map<int, double> per_class;
};

MiouResult miou(const ConfusionMatrix& cm, const std::set<int>& class_set);

struct GzslReport {
    double seen_miou = 0.0;
    double unseen_miou = 0.0;
    double harmonic = 0.0;
    bool defined = false;
    std::map<int, double> per_class;
};

GzslReport gzsl_report(const ConfusionMatrix& cm, const std::set<int>& seen,
                       const std::set<int>& unseen);

double harmonic_mean(double s, double u);

} // namespace zss
