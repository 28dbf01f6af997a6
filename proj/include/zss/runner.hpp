#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "zss/datagen.hpp"
#include "zss/pipeline.hpp"
#include "zss/runconfig.hpp"

namespace zss {

struct MetricUndefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataBundle {
    ClassCatalog catalog;
    std::vector<Sample> train, unlabeled, test;
};

// dataset directory contents: catalog.json, catalog.bin (embeddings),
// train.bin / unlabeled.bin / test.bin (images + labels), manifest.json
DataBundle generate_data(const RunConfig& cfg);
void write_data(const DataBundle& data, const RunConfig& cfg, const std::string& out_dir);
DataBundle load_data(const std::string& dir);

std::unique_ptr<Trainer<float>> make_trainer(const RunConfig& cfg, const DataBundle& data);

void save_checkpoint(Trainer<float>& t, const std::string& path);
void load_checkpoint(Trainer<float>& t, const std::string& path);
RunConfig checkpoint_config(const std::string& path);

// Commands (the C API and the CLI are thin wrappers around these). Each
// returns the JSON record it also writes to disk; errors are exceptions.
std::string cmd_gen_data(const RunConfig& cfg, const std::string& out_dir);
std::string cmd_train(const RunConfig& cfg);
std::string cmd_selftrain(const RunConfig& cfg, const std::string& checkpoint_path);
std::string cmd_eval(const std::string& checkpoint_path, const std::string& data_dir);
std::string cmd_ablate(const RunConfig& cfg, const std::string& axis,
                       const std::vector<std::string>& values,
                       const std::vector<std::uint64_t>& seeds);

} // namespace zss
