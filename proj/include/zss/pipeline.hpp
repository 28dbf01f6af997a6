#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "zss/datagen.hpp"
#include "zss/eval.hpp"
#include "zss/losses.hpp"
#include "zss/networks.hpp"
#include "zss/optimizer.hpp"
#include "zss/posenc.hpp"
#include "zss/runconfig.hpp"

namespace zss {

struct StageReport {
    std::string stage; // SIM, G, TRANSFER, SELF_TRAIN
    long steps = 0;
    std::map<std::string, std::vector<double>> loss_series;
    double wall_time = 0.0;
    std::uint64_t seed = 0;
};

enum class PseudoSource { RandomRegion, RelabeledGt };

struct PseudoLayout {
    LabelMap label_map;
    PseudoSource source = PseudoSource::RelabeledGt;
};

struct NumericAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Copies gt, picks one same-label connected component uniformly (or a random
// rectangle covering 10-40% of pixels when the map is all-ignore) and
// relabels it with a uniformly drawn unseen class.
inline PseudoLayout build_pseudo_layout(const LabelMap& gt, const std::set<int>& unseen,
                                        Prng& rng) {
    if (unseen.empty()) throw ValueError("build_pseudo_layout: unseen set is empty");
    std::vector<int> unseen_v(unseen.begin(), unseen.end());
    int cls = unseen_v[rng.below(unseen_v.size())];

    PseudoLayout out;
    out.label_map = gt;

    // connected components over equal non-ignore labels, 4-connectivity
    std::vector<std::vector<std::size_t>> components;
    std::vector<char> visited(gt.size(), 0);
    for (std::size_t start = 0; start < gt.size(); ++start) {
        if (visited[start] || gt.ids[start] == LabelMap::kIgnore) continue;
        int id = gt.ids[start];
        std::vector<std::size_t> comp;
        std::queue<std::size_t> q;
        q.push(start);
        visited[start] = 1;
        while (!q.empty()) {
            std::size_t p = q.front();
            q.pop();
            comp.push_back(p);
            std::size_t y = p / gt.w, x = p % gt.w;
            auto push = [&](std::size_t ny, std::size_t nx) {
                std::size_t np = ny * gt.w + nx;
                if (!visited[np] && gt.ids[np] == id) {
                    visited[np] = 1;
                    q.push(np);
                }
            };
            if (y > 0) push(y - 1, x);
            if (y + 1 < gt.h) push(y + 1, x);
            if (x > 0) push(y, x - 1);
            if (x + 1 < gt.w) push(y, x + 1);
        }
        components.push_back(std::move(comp));
    }

    if (!components.empty()) {
        const auto& comp = components[rng.below(components.size())];
        for (std::size_t p : comp) out.label_map.ids[p] = cls;
        out.source = PseudoSource::RelabeledGt;
    } else {
        // degenerate gt: random rectangle covering 10-40% of pixels
        std::size_t area_lo = std::max<std::size_t>(1, gt.size() / 10);
        std::size_t area = area_lo + rng.below(gt.size() * 2 / 5 - area_lo + 1);
        std::size_t rh = std::max<std::size_t>(
            1, std::min(gt.h, static_cast<std::size_t>(std::sqrt(double(area)))));
        std::size_t rw = std::min(gt.w, std::max<std::size_t>(1, (area + rh - 1) / rh));
        std::size_t y0 = rng.below(gt.h - rh + 1);
        std::size_t x0 = rng.below(gt.w - rw + 1);
        for (std::size_t y = y0; y < y0 + rh; ++y)
            for (std::size_t x = x0; x < x0 + rw; ++x)
                out.label_map.at(y, x) = cls;
        out.source = PseudoSource::RandomRegion;
    }
    return out;
}

template <class T>
class Trainer {
public:
    // G/D alternations per trunk step; the synthesis nets lag the trunk badly
    // with only one update each.
    static constexpr long kGanInnerSteps = 2;

    Trainer(const RunConfig& cfg, const ClassCatalog& catalog,
            std::vector<Sample> train, std::vector<Sample> unlabeled,
            std::vector<Sample> test)
        : cfg_(cfg), catalog_(catalog), train_(std::move(train)),
          unlabeled_(std::move(unlabeled)), test_(std::move(test)) {
        SimConfig sc;
        sc.arch = cfg.sim_arch;
        sc.heads = cfg.heads;
        sc.feature_channels = cfg.feature_channels;
        sc.latent_channels = cfg.latent_channels;
        bundle_ = ModelBundle<T>(catalog.num_classes(), sc, catalog.embeddings, cfg.seed);

        feat_h_ = cfg.image_size / Encoder<T>::kDownsample;
        feat_w_ = feat_h_;
        pe_ = build_pe_map<T>(feat_h_, feat_w_, cfg.pe_mode,
                              std::make_pair(feat_h_, feat_w_));

        main_opt_ = std::make_unique<Optimizer<T>>(OptMode::SgdPoly, T(cfg.lr_main),
                                                   bundle_.main_params(), cfg.steps_sim_g,
                                                   T(cfg.poly_power));
        gen_opt_ = std::make_unique<Optimizer<T>>(OptMode::Adam, T(cfg.lr_gen),
                                                  bundle_.generator_params());
        disc_opt_ = std::make_unique<Optimizer<T>>(OptMode::Adam, T(cfg.lr_disc),
                                                   bundle_.discriminator_params());
        transfer_opt_ = std::make_unique<Optimizer<T>>(OptMode::SgdPoly, T(cfg.lr_transfer),
                                                       bundle_.classifier_params(),
                                                       cfg.steps_transfer,
                                                       T(cfg.poly_power));
        selftrain_opt_ = std::make_unique<Optimizer<T>>(OptMode::SgdPoly, T(cfg.lr_selftrain),
                                                        bundle_.classifier_params(),
                                                        cfg.steps_selftrain,
                                                        T(cfg.poly_power));
    }

    ModelBundle<T>& bundle() { return bundle_; }
    const RunConfig& config() const { return cfg_; }
    const ClassCatalog& catalog() const { return catalog_; }
    Optimizer<T>& main_opt() { return *main_opt_; }
    Optimizer<T>& gen_opt() { return *gen_opt_; }
    Optimizer<T>& disc_opt() { return *disc_opt_; }
    Optimizer<T>& transfer_opt() { return *transfer_opt_; }
    Optimizer<T>& selftrain_opt() { return *selftrain_opt_; }
    std::size_t feature_h() const { return feat_h_; }
    const Tensor<T>& pe_values() const { return pe_.values; }

    Tensor<T> image_tensor(const Sample& s) const {
        std::vector<T> d(s.image.begin(), s.image.end());
        return Tensor<T>::leaf({3, s.h, s.w}, std::move(d));
    }

    LabelMap feature_labels(const Sample& s) const {
        return downsample_labels(s.labels, Encoder<T>::kDownsample);
    }

    struct Forward {
        Tensor<T> features, fx, logits;
        LatentParams<T> lat;
    };

    // Encoder and SIM parameters only change during the joint stage, so their
    // output per dataset sample is memoized for the classifier-only stages and
    // for evaluation. The cache is cleared whenever the trunk can change.
    Tensor<T> frozen_features(const Sample& s) const {
        auto in_set = [&s](const std::vector<Sample>& v) {
            return !v.empty() && &s >= v.data() && &s < v.data() + v.size();
        };
        bool cacheable = in_set(train_) || in_set(unlabeled_) || in_set(test_);
        if (cacheable) {
            auto it = feat_cache_.find(&s);
            if (it != feat_cache_.end()) return it->second;
        }
        NoGradGuard ng;
        Tensor<T> fx =
            bundle_.sim.forward(bundle_.encoder.forward(image_tensor(s)), pe_.values)
                .first;
        if (cacheable) feat_cache_.emplace(&s, fx);
        return fx;
    }

    void invalidate_feature_cache() { feat_cache_.clear(); }

    Forward forward(const Tensor<T>& image) const {
        Forward f;
        f.features = bundle_.encoder.forward(image);
        auto [fx, lat] = bundle_.sim.forward(f.features, pe_.values);
        f.fx = fx;
        f.lat = lat;
        f.logits = bundle_.classifier.forward(fx);
        return f;
    }

    // -- stage losses (also used by the gradient acceptance suite) ---------

    // L_pred^train + alpha * L_KLD over one sample
    Tensor<T> sim_stage_loss(const Sample& s) const {
        LabelMap y = feature_labels(s);
        for (int id : y.ids)
            if (id != LabelMap::kIgnore && !catalog_.seen.count(id))
                throw ValueError("train_step_sim: batch contains unseen class " +
                                 std::to_string(id));
        Forward f = forward(image_tensor(s));
        Tensor<T> ce = cross_entropy(f.logits, y);
        Tensor<T> kld = kld_standard_normal(f.lat.mu, f.lat.logvar);
        return ce + scale(kld, T(cfg_.alpha));
    }

    // one joint SIM + G optimization step over a deterministic batch
    void train_step_joint(long step, StageReport& rep) {
        invalidate_feature_cache(); // the trunk is about to move
        Prng brng = substream(cfg_.seed, "batch/sim", static_cast<std::uint64_t>(step));
        std::vector<std::size_t> batch;
        for (std::size_t i = 0; i < cfg_.batch_size; ++i)
            batch.push_back(brng.below(train_.size()));

        // ---- SIM part: updates E, SIM, C
        main_opt_->zero_grad();
        double ce_acc = 0, kld_acc = 0;
        std::vector<Tensor<T>> fx_det;
        std::vector<LatentParams<T>> lat_det;
        std::vector<LabelMap> ys;
        {
            Tensor<T> total;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const Sample& s = train_[batch[i]];
                LabelMap y = feature_labels(s);
                for (int id : y.ids)
                    if (id != LabelMap::kIgnore && !catalog_.seen.count(id))
                        throw ValueError("train_step_sim: batch contains unseen class");
                Forward f = forward(image_tensor(s));
                Tensor<T> ce = cross_entropy(f.logits, y);
                Tensor<T> kld = kld_standard_normal(f.lat.mu, f.lat.logvar);
                ce_acc += static_cast<double>(ce.item());
                kld_acc += static_cast<double>(kld.item());
                Tensor<T> loss = ce + scale(kld, T(cfg_.alpha));
                total = total.defined() ? total + loss : loss;
                fx_det.push_back(f.fx.detach());
                lat_det.push_back({f.lat.mu.detach(), f.lat.logvar.detach()});
                ys.push_back(std::move(y));
            }
            total = scale(total, T(1) / T(batch.size()));
            check_finite(total.item(), "sim stage loss");
            backward(total);
            main_opt_->step();
        }

        // ---- G part: D ascends L_adv, then G descends adv + beta * MMD
        // (encoder and SIM fixed: inputs are detached). G and D are tiny next
        // to the trunk, so several alternations ride on one trunk forward.
        double adv_acc = 0, mmd_acc = 0;
        for (long inner = 0; inner < kGanInnerSteps; ++inner) {
        std::vector<Tensor<T>> fakes;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Prng nrng = substream(cfg_.seed, "noise",
                                  static_cast<std::uint64_t>(step * kGanInnerSteps + inner),
                                  i);
            Tensor<T> noise = normal_like(lat_det[i].mu.shape(), nrng);
            Tensor<T> z = reparameterize(lat_det[i], noise);
            Tensor<T> e = map_labels<T>(ys[i], bundle_.embeddings);
            fakes.push_back(bundle_.generator.forward(e, z));
        }

        adv_acc = 0;
        mmd_acc = 0;
        {
            disc_opt_->zero_grad();
            Tensor<T> total;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                Tensor<T> d_real = bundle_.discriminator.forward(fx_det[i]);
                Tensor<T> d_fake = bundle_.discriminator.forward(fakes[i].detach());
                auto adv = adversarial_losses(d_real, d_fake);
                adv_acc += static_cast<double>(adv.d_objective.item());
                Tensor<T> loss = scale(adv.d_objective, T(-1)); // ascend L_adv
                total = total.defined() ? total + loss : loss;
            }
            total = scale(total, T(1) / T(batch.size()));
            check_finite(total.item(), "discriminator loss");
            backward(total);
            disc_opt_->step();
        }
        {
            gen_opt_->zero_grad();
            Tensor<T> total;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                Tensor<T> d_fake = bundle_.discriminator.forward(fakes[i]);
                Tensor<T> dr_detached = bundle_.discriminator.forward(fx_det[i]).detach();
                auto adv = adversarial_losses(dr_detached, d_fake);
                Tensor<T> mmd = mmd_loss(fx_det[i], fakes[i], ys[i], catalog_.seen);
                mmd_acc += static_cast<double>(mmd.item());
                Tensor<T> loss = adv.g_objective + scale(mmd, T(cfg_.beta));
                total = total.defined() ? total + loss : loss;
            }
            total = scale(total, T(1) / T(batch.size()));
            check_finite(total.item(), "generator loss");
            backward(total);
            gen_opt_->step();
        }
        } // inner G/D alternations

        rep.loss_series["ce"].push_back(ce_acc / batch.size());
        rep.loss_series["kld"].push_back(kld_acc / batch.size());
        rep.loss_series["adv"].push_back(adv_acc / batch.size());
        rep.loss_series["mmd"].push_back(mmd_acc / batch.size());
    }

    StageReport run_sim_g() {
        StageReport rep{"SIM+G", 0, {}, 0.0, cfg_.seed};
        auto t0 = std::chrono::steady_clock::now();
        for (long step = main_opt_->step_count(); step < cfg_.steps_sim_g; ++step) {
            train_step_joint(step, rep);
            ++rep.steps;
        }
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
        return rep;
    }

    // one transfer step: fine-tunes C on real + synthetic features
    void transfer_step(long step, StageReport& rep) {
        Prng brng = substream(cfg_.seed, "batch/trans", static_cast<std::uint64_t>(step));
        transfer_opt_->zero_grad();
        Tensor<T> total;
        double real_acc = 0, trans_acc = 0;
        for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
            const Sample& s = train_[brng.below(train_.size())];
            LabelMap y = feature_labels(s);

            // E and SIM are frozen in this stage
            Tensor<T> fx = frozen_features(s);
            Tensor<T> ce_real = cross_entropy(bundle_.classifier.forward(fx), y);

            // synthetic branch: pseudo-layout -> M -> G (frozen), prior z
            Prng lrng = substream(cfg_.seed, "layout", static_cast<std::uint64_t>(step), i);
            PseudoLayout layout = build_pseudo_layout(y, catalog_.unseen, lrng);
            Tensor<T> fake;
            {
                NoGradGuard ng;
                Tensor<T> e = map_labels<T>(layout.label_map, bundle_.embeddings);
                Prng nrng = substream(cfg_.seed, "noise/trans",
                                      static_cast<std::uint64_t>(step), i);
                Tensor<T> z = normal_like(Shape{cfg_.latent_channels, feat_h_, feat_w_}, nrng);
                fake = bundle_.generator.forward(e, z);
                // unseen-class embeddings reach G untrained, so its output can
                // land far outside the encoder's (0,1) feature range; project
                // back so the classifier logits stay finite
                for (auto& v : fake.mutable_data()) v = std::clamp(v, T(-8), T(8));
            }
            Tensor<T> ce_trans = cross_entropy(bundle_.classifier.forward(fake),
                                               layout.label_map);
            real_acc += static_cast<double>(ce_real.item());
            trans_acc += static_cast<double>(ce_trans.item());
            Tensor<T> loss = ce_real + ce_trans;
            total = total.defined() ? total + loss : loss;
        }
        total = scale(total, T(1) / T(cfg_.batch_size));
        check_finite(total.item(), "transfer loss");
        backward(total);
        transfer_opt_->step();
        rep.loss_series["ce_real"].push_back(real_acc / cfg_.batch_size);
        rep.loss_series["ce_trans"].push_back(trans_acc / cfg_.batch_size);
    }

    StageReport run_transfer() {
        StageReport rep{"TRANSFER", 0, {}, 0.0, cfg_.seed};
        auto t0 = std::chrono::steady_clock::now();
        for (long step = transfer_opt_->step_count(); step < cfg_.steps_transfer; ++step) {
            transfer_step(step, rep);
            ++rep.steps;
        }
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
        return rep;
    }

    struct PseudoAnnotation {
        LabelMap labels;
        std::vector<T> weights;
    };

    // predictions + per-pixel confidence on one image (no graph)
    PseudoAnnotation annotate(const Sample& s, SelfTrainStrategy strategy) const {
        NoGradGuard ng;
        Tensor<T> logits = bundle_.classifier.forward(frozen_features(s));
        Tensor<T> probs = softmax(logits, 0);
        std::size_t k = probs.shape()[0], plane = feat_h_ * feat_w_;
        PseudoAnnotation ann;
        ann.labels = LabelMap(feat_h_, feat_w_);
        std::vector<T> conf(plane);
        for (std::size_t p = 0; p < plane; ++p) {
            T best = probs.data()[p];
            std::size_t bi = 0;
            for (std::size_t c = 1; c < k; ++c) {
                T v = probs.data()[c * plane + p];
                if (v > best) {
                    best = v;
                    bi = c;
                }
            }
            ann.labels.ids[p] = static_cast<int>(bi);
            conf[p] = best;
        }
        if (strategy == SelfTrainStrategy::Ast) {
            ann.weights = ast_weights(conf, cfg_.temperature);
        } else {
            auto mask = st_mask(conf, cfg_.keep_fraction);
            ann.weights.assign(plane, T(0));
            for (std::size_t p = 0; p < plane; ++p)
                if (mask[p]) ann.weights[p] = T(1);
        }
        return ann;
    }

    StageReport self_train_round(SelfTrainStrategy strategy) {
        if (unlabeled_.empty()) throw ValueError("self_train_round: empty unlabeled set");
        StageReport rep{"SELF_TRAIN", 0, {}, 0.0, cfg_.seed};
        auto t0 = std::chrono::steady_clock::now();

        // pseudo-annotations are produced once, by the pre-round model
        std::vector<PseudoAnnotation> anns;
        anns.reserve(unlabeled_.size());
        for (const auto& s : unlabeled_) anns.push_back(annotate(s, strategy));

        for (long step = selftrain_opt_->step_count(); step < cfg_.steps_selftrain; ++step) {
            Prng brng = substream(cfg_.seed, "batch/self", static_cast<std::uint64_t>(step));
            selftrain_opt_->zero_grad();
            Tensor<T> total;
            double acc = 0;
            for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
                std::size_t ui = brng.below(unlabeled_.size());
                std::size_t ti = brng.below(train_.size());
                // only C updates in this stage
                Tensor<T> fx_u = frozen_features(unlabeled_[ui]);
                Tensor<T> fx_t = frozen_features(train_[ti]);
                // pseudo-labeled pixels carry confidence weights; real seen
                // labels keep weight 1
                Tensor<T> ce_u = cross_entropy(bundle_.classifier.forward(fx_u),
                                               anns[ui].labels, anns[ui].weights);
                Tensor<T> ce_t = cross_entropy(bundle_.classifier.forward(fx_t),
                                               feature_labels(train_[ti]));
                Tensor<T> loss = ce_u + ce_t;
                acc += static_cast<double>(loss.item());
                total = total.defined() ? total + loss : loss;
            }
            total = scale(total, T(1) / T(cfg_.batch_size));
            check_finite(total.item(), "self-train loss");
            backward(total);
            selftrain_opt_->step();
            rep.loss_series["ce"].push_back(acc / cfg_.batch_size);
            ++rep.steps;
        }
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
        return rep;
    }

    // -- evaluation --------------------------------------------------------

    LabelMap predict(const Sample& s) const {
        NoGradGuard ng;
        Tensor<T> logits = bundle_.classifier.forward(frozen_features(s));
        std::size_t k = logits.shape()[0], plane = feat_h_ * feat_w_;
        LabelMap pred(feat_h_, feat_w_);
        for (std::size_t p = 0; p < plane; ++p) {
            T best = logits.data()[p];
            std::size_t bi = 0;
            for (std::size_t c = 1; c < k; ++c) {
                T v = logits.data()[c * plane + p];
                if (v > best) {
                    best = v;
                    bi = c;
                }
            }
            pred.ids[p] = static_cast<int>(bi);
        }
        return pred;
    }

    GzslReport evaluate_test() const { return evaluate(test_); }

    GzslReport evaluate(const std::vector<Sample>& ds) const {
        ConfusionMatrix cm(catalog_.num_classes());
        for (const auto& s : ds) cm.accumulate(predict(s), feature_labels(s));
        return gzsl_report(cm, catalog_.seen, catalog_.unseen);
    }

    const std::vector<Sample>& train_set() const { return train_; }
    const std::vector<Sample>& unlabeled_set() const { return unlabeled_; }
    const std::vector<Sample>& test_set() const { return test_; }

private:
    static Tensor<T> normal_like(const Shape& shape, Prng& rng) {
        std::vector<T> d(numel_of(shape));
        for (auto& v : d) v = static_cast<T>(rng.normal());
        return Tensor<T>::leaf(shape, std::move(d));
    }

    static void check_finite(T v, const char* what) {
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericAbort(std::string("non-finite ") + what);
    }

    RunConfig cfg_;
    ClassCatalog catalog_;
    std::vector<Sample> train_, unlabeled_, test_;
    ModelBundle<T> bundle_;
    PeMap<T> pe_;
    std::size_t feat_h_ = 0, feat_w_ = 0;
    mutable std::map<const Sample*, Tensor<T>> feat_cache_;
    std::unique_ptr<Optimizer<T>> main_opt_, gen_opt_, disc_opt_, transfer_opt_,
        selftrain_opt_;
};

} // namespace zss
