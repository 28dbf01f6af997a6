// Command-line front end; all work goes through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "zss/zss.h"

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string data_dir;
    long long seed = -1;
    std::string pe, sim_arch, strategy;
    double temperature = -1.0, keep_fraction = -1.0;
    std::string checkpoint;
    std::string resume;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "JSON config file");
    cmd->add_option("--seed", a.seed, "RNG seed");
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--data", a.data_dir, "dataset directory");
    cmd->add_option("--pe", a.pe, "positional encoding mode")
        ->check(CLI::IsMember({"none", "ape", "ape-interp", "rpe"}));
    cmd->add_option("--sim-arch", a.sim_arch, "SIM encoder architecture")
        ->check(CLI::IsMember({"conv", "attention", "self-attn", "mhsa"}));
    cmd->add_option("--strategy", a.strategy, "self-training strategy")
        ->check(CLI::IsMember({"st", "ast"}));
    cmd->add_option("--temperature", a.temperature, "annealed softmax temperature");
    cmd->add_option("--keep-fraction", a.keep_fraction, "ST confidence keep fraction");
}

// merge file config (if any) with flag overrides into one JSON text
std::string build_config(const CommonArgs& a, std::string* err) {
    json j = json::object();
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) {
            *err = "cannot read config file: " + a.config_path;
            return "";
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        try {
            j = json::parse(ss.str());
        } catch (const std::exception& e) {
            *err = std::string("bad config JSON: ") + e.what();
            return "";
        }
    }
    if (a.seed >= 0) j["seed"] = a.seed;
    if (!a.out_dir.empty()) j["out_dir"] = a.out_dir;
    if (!a.data_dir.empty()) j["data_dir"] = a.data_dir;
    if (!a.pe.empty()) j["pe_mode"] = a.pe;
    if (!a.sim_arch.empty()) j["sim_arch"] = a.sim_arch;
    if (!a.strategy.empty()) j["strategy"] = a.strategy;
    if (a.temperature > 0) j["temperature"] = a.temperature;
    if (a.keep_fraction > 0) j["keep_fraction"] = a.keep_fraction;
    if (!a.resume.empty()) j["resume"] = a.resume;
    return j.dump();
}

int finish(zss_session* session, int rc, bool print_result) {
    if (rc != 0)
        std::cerr << "error: " << zss_session_error(session) << "\n";
    else if (print_result)
        std::cout << zss_session_result_json(session) << "\n";
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-shot semantic segmentation trainer"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, self_args, eval_args, ablate_args;
    std::string axis, values, seeds;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* train = app.add_subcommand("train", "run SIM+G training then transfer");
    add_common(train, train_args);
    train->add_option("--resume", train_args.resume, "checkpoint to resume from");

    CLI::App* self = app.add_subcommand("selftrain", "run a self-training round");
    add_common(self, self_args);
    self->add_option("--checkpoint", self_args.checkpoint, "trained checkpoint")
        ->required();

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(ev, eval_args);
    ev->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path")->required();

    CLI::App* ab = app.add_subcommand("ablate", "sweep one configuration axis");
    add_common(ab, ablate_args);
    ab->add_option("--axis", axis, "pe | temperature | sim-arch")->required();
    ab->add_option("--values", values, "comma-separated axis values");
    ab->add_option("--seeds", seeds, "comma-separated seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    zss_session* session = zss_session_new();
    int rc = 0;
    std::string err;
    auto config_of = [&err](const CommonArgs& a) { return build_config(a, &err); };

    if (gen->parsed()) {
        std::string cfg = config_of(gen_args);
        rc = err.empty() ? zss_gen_data(session, cfg.c_str(), gen_args.out_dir.c_str()) : 2;
        if (rc == 0) rc = finish(session, rc, true);
    } else if (train->parsed()) {
        std::string cfg = config_of(train_args);
        rc = err.empty() ? zss_train(session, cfg.c_str()) : 2;
        rc = finish(session, rc, false);
    } else if (self->parsed()) {
        std::string cfg = config_of(self_args);
        rc = err.empty() ? zss_selftrain(session, cfg.c_str(), self_args.checkpoint.c_str())
                         : 2;
        rc = finish(session, rc, false);
    } else if (ev->parsed()) {
        std::string cfg = config_of(eval_args);
        rc = err.empty()
                 ? zss_eval(session, eval_args.checkpoint.c_str(), eval_args.data_dir.c_str())
                 : 2;
        rc = finish(session, rc, false);
    } else if (ab->parsed()) {
        std::string cfg = config_of(ablate_args);
        rc = err.empty()
                 ? zss_ablate(session, cfg.c_str(), axis.c_str(), values.c_str(),
                              seeds.c_str())
                 : 2;
        rc = finish(session, rc, true);
    }
    if (!err.empty()) std::cerr << "error: " << err << "\n";

    zss_session_free(session);
    return rc;
}
