#pragma once

#include <cstdint>
#include <string>

#include "zss/posenc.hpp"
#include "zss/sim.hpp"

namespace zss {

enum class SelfTrainStrategy { St, Ast };

struct RunConfig {
    std::uint64_t seed = 1;

    // dataset
    std::size_t image_size = 32;
    std::size_t n_seen = 7; // includes background
    std::size_t n_unseen = 3;
    std::size_t n_train = 160;
    std::size_t n_unlabeled = 64;
    std::size_t n_test = 64;

    // model
    PeMode pe_mode = PeMode::Rpe;
    SimArch sim_arch = SimArch::Conv;
    std::size_t heads = 4;
    std::size_t feature_channels = 32;
    std::size_t latent_channels = 16;

    // losses
    double alpha = 100.0;
    double beta = 50.0;
    double temperature = 2.0;
    double keep_fraction = 0.75;
    SelfTrainStrategy strategy = SelfTrainStrategy::Ast;

    // optimization (desk-scale defaults; see README)
    double lr_main = 0.05;      // SGD + poly for encoder/SIM/classifier
    double lr_gen = 2e-3;       // Adam for generator
    double lr_disc = 2e-3;      // Adam for discriminator
    double lr_transfer = 0.05;  // classifier-only fine-tune; kept separate from
                                // lr_main (too hot a rate diverges on the
                                // synthetic-feature branch)
    double lr_selftrain = 5e-3; // gentler fine-tune so pseudo-label noise
                                // cannot erase the transferred unseen logits
    double poly_power = 0.9;
    long steps_sim_g = 1500;
    long steps_transfer = 500;
    long steps_selftrain = 300;
    std::size_t batch_size = 4;

    // paths
    std::string data_dir;
    std::string out_dir;
    std::string resume; // optional checkpoint to resume cmd_train from

    std::string to_json() const;          // canonical (sorted keys)
    static RunConfig from_json(const std::string& text);
    std::uint64_t config_hash() const;
};

std::string pe_mode_name(PeMode m);
PeMode pe_mode_from(const std::string& s);
std::string sim_arch_name(SimArch a);
SimArch sim_arch_from(const std::string& s);
std::string strategy_name(SelfTrainStrategy s);
SelfTrainStrategy strategy_from(const std::string& s);

} // namespace zss
