#include "zss/zss.h"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "zss/runner.hpp"

struct zss_session {
    std::string error;
    std::string result;
};

namespace {

std::vector<std::string> split_csv(const char* text) {
    std::vector<std::string> out;
    if (!text || !*text) return out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int run_guarded(zss_session* s, const std::function<std::string()>& body) {
    s->error.clear();
    s->result.clear();
    try {
        s->result = body();
        return 0;
    } catch (const zss::MetricUndefined& e) {
        s->error = e.what();
        return 3;
    } catch (const zss::NumericAbort& e) {
        s->error = e.what();
        return 4;
    } catch (const std::exception& e) {
        s->error = e.what();
        return 2;
    }
}

zss::RunConfig parse_config(const char* config_json) {
    return zss::RunConfig::from_json(config_json && *config_json ? config_json : "{}");
}

} // namespace

extern "C" {

zss_session* zss_session_new(void) { return new zss_session(); }

void zss_session_free(zss_session* s) { delete s; }

const char* zss_session_error(const zss_session* s) { return s->error.c_str(); }

const char* zss_session_result_json(const zss_session* s) { return s->result.c_str(); }

int zss_gen_data(zss_session* s, const char* config_json, const char* out_dir) {
    return run_guarded(s, [&] {
        std::string dir = out_dir ? out_dir : "";
        if (dir.empty()) throw zss::IoError("gen-data: out_dir is required");
        return zss::cmd_gen_data(parse_config(config_json), dir);
    });
}

int zss_train(zss_session* s, const char* config_json) {
    return run_guarded(s, [&] { return zss::cmd_train(parse_config(config_json)); });
}

int zss_selftrain(zss_session* s, const char* config_json, const char* checkpoint_path) {
    return run_guarded(s, [&] {
        if (!checkpoint_path || !*checkpoint_path)
            throw zss::IoError("selftrain: checkpoint path is required");
        return zss::cmd_selftrain(parse_config(config_json), checkpoint_path);
    });
}

int zss_eval(zss_session* s, const char* checkpoint_path, const char* data_dir) {
    return run_guarded(s, [&] {
        if (!checkpoint_path || !*checkpoint_path)
            throw zss::IoError("eval: checkpoint path is required");
        if (!data_dir || !*data_dir) throw zss::IoError("eval: data dir is required");
        return zss::cmd_eval(checkpoint_path, data_dir);
    });
}

int zss_ablate(zss_session* s, const char* config_json, const char* axis,
               const char* values_csv, const char* seeds_csv) {
    return run_guarded(s, [&] {
        if (!axis || !*axis) throw zss::ValueError("ablate: axis is required");
        std::vector<std::uint64_t> seeds;
        for (const auto& t : split_csv(seeds_csv)) seeds.push_back(std::stoull(t));
        return zss::cmd_ablate(parse_config(config_json), axis, split_csv(values_csv),
                               seeds);
    });
}

} // extern "C"
