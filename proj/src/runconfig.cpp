#include "zss/runconfig.hpp"

#include <json.hpp>

#include "zss/prng.hpp"

namespace zss {

using nlohmann::json;

std::string pe_mode_name(PeMode m) {
    switch (m) {
    case PeMode::None: return "none";
    case PeMode::Rpe: return "rpe";
    case PeMode::Ape: return "ape";
    case PeMode::ApeInterp: return "ape-interp";
    }
    return "?";
}

PeMode pe_mode_from(const std::string& s) {
    if (s == "none") return PeMode::None;
    if (s == "rpe") return PeMode::Rpe;
    if (s == "ape") return PeMode::Ape;
    if (s == "ape-interp") return PeMode::ApeInterp;
    throw ValueError("unknown pe mode: " + s);
}

std::string sim_arch_name(SimArch a) {
    switch (a) {
    case SimArch::Conv: return "conv";
    case SimArch::Attention: return "attention";
    case SimArch::SelfAttn: return "self-attn";
    case SimArch::MultiheadSa: return "mhsa";
    }
    return "?";
}

SimArch sim_arch_from(const std::string& s) {
    if (s == "conv") return SimArch::Conv;
    if (s == "attention") return SimArch::Attention;
    if (s == "self-attn") return SimArch::SelfAttn;
    if (s == "mhsa") return SimArch::MultiheadSa;
    throw ValueError("unknown sim arch: " + s);
}

std::string strategy_name(SelfTrainStrategy s) {
    return s == SelfTrainStrategy::St ? "st" : "ast";
}

SelfTrainStrategy strategy_from(const std::string& s) {
    if (s == "st") return SelfTrainStrategy::St;
    if (s == "ast") return SelfTrainStrategy::Ast;
    throw ValueError("unknown strategy: " + s);
}

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["image_size"] = image_size;
    j["n_seen"] = n_seen;
    j["n_unseen"] = n_unseen;
    j["n_train"] = n_train;
    j["n_unlabeled"] = n_unlabeled;
    j["n_test"] = n_test;
    j["pe_mode"] = pe_mode_name(pe_mode);
    j["sim_arch"] = sim_arch_name(sim_arch);
    j["heads"] = heads;
    j["feature_channels"] = feature_channels;
    j["latent_channels"] = latent_channels;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["temperature"] = temperature;
    j["keep_fraction"] = keep_fraction;
    j["strategy"] = strategy_name(strategy);
    j["lr_main"] = lr_main;
    j["lr_gen"] = lr_gen;
    j["lr_disc"] = lr_disc;
    j["lr_transfer"] = lr_transfer;
    j["lr_selftrain"] = lr_selftrain;
    j["poly_power"] = poly_power;
    j["steps_sim_g"] = steps_sim_g;
    j["steps_transfer"] = steps_transfer;
    j["steps_selftrain"] = steps_selftrain;
    j["batch_size"] = batch_size;
    j["data_dir"] = data_dir;
    j["out_dir"] = out_dir;
    j["resume"] = resume;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    RunConfig c;
    auto opt = [&j](const char* key, auto& target) {
        if (j.contains(key)) target = j.at(key).template get<std::decay_t<decltype(target)>>();
    };
    opt("seed", c.seed);
    opt("image_size", c.image_size);
    opt("n_seen", c.n_seen);
    opt("n_unseen", c.n_unseen);
    opt("n_train", c.n_train);
    opt("n_unlabeled", c.n_unlabeled);
    opt("n_test", c.n_test);
    if (j.contains("pe_mode")) c.pe_mode = pe_mode_from(j.at("pe_mode").get<std::string>());
    if (j.contains("sim_arch")) c.sim_arch = sim_arch_from(j.at("sim_arch").get<std::string>());
    opt("heads", c.heads);
    opt("feature_channels", c.feature_channels);
    opt("latent_channels", c.latent_channels);
    opt("alpha", c.alpha);
    opt("beta", c.beta);
    opt("temperature", c.temperature);
    opt("keep_fraction", c.keep_fraction);
    if (j.contains("strategy")) c.strategy = strategy_from(j.at("strategy").get<std::string>());
    opt("lr_main", c.lr_main);
    opt("lr_gen", c.lr_gen);
    opt("lr_disc", c.lr_disc);
    opt("lr_transfer", c.lr_transfer);
    opt("lr_selftrain", c.lr_selftrain);
    opt("poly_power", c.poly_power);
    opt("steps_sim_g", c.steps_sim_g);
    opt("steps_transfer", c.steps_transfer);
    opt("steps_selftrain", c.steps_selftrain);
    opt("batch_size", c.batch_size);
    opt("data_dir", c.data_dir);
    opt("out_dir", c.out_dir);
    opt("resume", c.resume);
    if (c.alpha <= 0.0 || c.beta <= 0.0) throw ValueError("alpha and beta must be > 0");
    if (c.temperature <= 0.0) throw ValueError("temperature must be > 0");
    return c;
}

std::uint64_t RunConfig::config_hash() const {
    RunConfig canon = *this;
    canon.out_dir.clear(); // output location does not change the run identity
    canon.resume.clear();
    return hash_combine(0, canon.to_json());
}

} // namespace zss
