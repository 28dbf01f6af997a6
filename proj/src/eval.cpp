#include "zss/eval.hpp"

#include <numeric>
#include <stdexcept>

namespace zss {

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t(0));
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt) {
    if (pred.h != gt.h || pred.w != gt.w)
        throw std::invalid_argument("confusion: pred/gt extent mismatch");
    for (std::size_t i = 0; i < gt.ids.size(); ++i) {
        int g = gt.ids[i];
        if (g == LabelMap::kIgnore) continue;
        int p = pred.ids[i];
        if (g < 0 || p < 0 || static_cast<std::size_t>(g) >= k_ ||
            static_cast<std::size_t>(p) >= k_)
            throw std::invalid_argument("confusion: class id overflow");
        ++counts_[static_cast<std::size_t>(g) * k_ + static_cast<std::size_t>(p)];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw std::invalid_argument("confusion: merge size mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

bool ConfusionMatrix::class_iou(std::size_t c, double& iou) const {
    std::uint64_t tp = at(c, c), fp = 0, fn = 0;
    for (std::size_t j = 0; j < k_; ++j) {
        if (j == c) continue;
        fp += at(j, c);
        fn += at(c, j);
    }
    std::uint64_t uni = tp + fp + fn;
    if (uni == 0) return false;
    iou = static_cast<double>(tp) / static_cast<double>(uni);
    return true;
}

MiouResult miou(const ConfusionMatrix& cm, const std::set<int>& class_set) {
    if (class_set.empty()) throw std::invalid_argument("miou: empty class set");
    MiouResult res;
    double acc = 0.0;
    std::size_t n = 0;
    for (int c : class_set) {
        double iou;
        if (cm.class_iou(static_cast<std::size_t>(c), iou)) {
            res.per_class[c] = iou;
            acc += iou;
            ++n;
        } else {
            res.zero_union_classes.push_back(c);
        }
    }
    if (n == 0) return res; // undefined-metric flag stays false
    res.miou = acc / static_cast<double>(n);
    res.defined = true;
    return res;
}

double harmonic_mean(double s, double u) {
    if (s <= 0.0 || u <= 0.0) return 0.0;
    return 2.0 * s * u / (s + u);
}

GzslReport gzsl_report(const ConfusionMatrix& cm, const std::set<int>& seen,
                       const std::set<int>& unseen) {
    MiouResult ms = miou(cm, seen);
    MiouResult mu = miou(cm, unseen);
    GzslReport rep;
    rep.seen_miou = ms.miou;
    rep.unseen_miou = mu.miou;
    rep.defined = ms.defined && mu.defined;
    rep.harmonic = harmonic_mean(ms.miou, mu.miou);
    rep.per_class = ms.per_class;
    rep.per_class.insert(mu.per_class.begin(), mu.per_class.end());
    return rep;
}

} // namespace zss
