#include "zss/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "zss/checkpoint.hpp"

namespace zss {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// dataset files

DataBundle generate_data(const RunConfig& cfg) {
    DataBundle data;
    data.catalog = make_class_catalog(cfg.n_seen, cfg.n_unseen, cfg.seed);
    auto render_split = [&](Split split, std::size_t n, std::vector<Sample>& out) {
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(render_sample(data.catalog, split, i, cfg.seed, cfg.image_size,
                                        cfg.image_size));
    };
    render_split(Split::TrainSeen, cfg.n_train, data.train);
    render_split(Split::UnlabeledMixed, cfg.n_unlabeled, data.unlabeled);
    render_split(Split::Test, cfg.n_test, data.test);
    return data;
}

namespace {

void write_split(const std::string& path, const std::vector<Sample>& samples) {
    if (samples.empty()) {
        write_container(path, {});
        return;
    }
    std::size_t h = samples[0].h, w = samples[0].w, n = samples.size();
    TensorRecord images{"images", {n, 3, h, w}, {}};
    TensorRecord labels{"labels", {n, h, w}, {}};
    images.data.reserve(n * 3 * h * w);
    labels.data.reserve(n * h * w);
    for (const auto& s : samples) {
        images.data.insert(images.data.end(), s.image.begin(), s.image.end());
        for (int id : s.labels.ids) labels.data.push_back(static_cast<float>(id));
    }
    write_container(path, {images, labels});
}

std::vector<Sample> read_split(const std::string& path, const ClassCatalog& catalog) {
    auto records = read_container(path);
    if (records.empty()) return {};
    const auto& images = find_record(records, "images");
    const auto& labels = find_record(records, "labels");
    std::size_t n = images.shape[0], h = images.shape[2], w = images.shape[3];
    std::vector<Sample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample& s = out[i];
        s.h = h;
        s.w = w;
        s.image.assign(images.data.begin() + i * 3 * h * w,
                       images.data.begin() + (i + 1) * 3 * h * w);
        s.labels = LabelMap(h, w);
        for (std::size_t p = 0; p < h * w; ++p) {
            s.labels.ids[p] = static_cast<int>(labels.data[i * h * w + p]);
            if (s.labels.ids[p] != LabelMap::kIgnore &&
                catalog.unseen.count(s.labels.ids[p]))
                s.has_unseen = true;
        }
    }
    return out;
}

json catalog_json(const ClassCatalog& cat) {
    json j;
    j["seed"] = cat.seed;
    j["classes"] = json::array();
    for (const auto& c : cat.classes) {
        json jc;
        jc["id"] = c.id;
        jc["name"] = c.name;
        jc["background"] = c.is_background;
        jc["shape"] = shape_name(c.shape);
        jc["color"] = color_name(c.color);
        jc["zone"] = zone_name(c.zone);
        j["classes"].push_back(jc);
    }
    j["seen"] = std::vector<int>(cat.seen.begin(), cat.seen.end());
    j["unseen"] = std::vector<int>(cat.unseen.begin(), cat.unseen.end());
    return j;
}

ShapeKind shape_from(const std::string& s) {
    if (s == "square") return ShapeKind::Square;
    if (s == "disk") return ShapeKind::Disk;
    if (s == "triangle") return ShapeKind::Triangle;
    if (s == "stripe") return ShapeKind::Stripe;
    throw IoError("bad shape name: " + s);
}
ColorKind color_from(const std::string& s) {
    if (s == "r") return ColorKind::R;
    if (s == "g") return ColorKind::G;
    if (s == "b") return ColorKind::B;
    throw IoError("bad color name: " + s);
}
ZoneKind zone_from(const std::string& s) {
    if (s == "top") return ZoneKind::Top;
    if (s == "bottom") return ZoneKind::Bottom;
    if (s == "any") return ZoneKind::Any;
    throw IoError("bad zone name: " + s);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void write_data(const DataBundle& data, const RunConfig& cfg, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw IoError("cannot create output directory: " + out_dir);

    write_text(out_dir + "/catalog.json", catalog_json(data.catalog).dump(2));

    // embeddings as one [K,600] record
    std::size_t k = data.catalog.num_classes();
    TensorRecord emb{"embeddings", {k, kEmbeddingDim}, {}};
    emb.data.reserve(k * kEmbeddingDim);
    for (std::size_t id = 0; id < k; ++id)
        for (double v : data.catalog.embeddings.at(static_cast<int>(id)))
            emb.data.push_back(static_cast<float>(v));
    write_container(out_dir + "/catalog.bin", {emb});

    write_split(out_dir + "/train.bin", data.train);
    write_split(out_dir + "/unlabeled.bin", data.unlabeled);
    write_split(out_dir + "/test.bin", data.test);

    json manifest;
    manifest["config_hash"] = cfg.config_hash();
    manifest["image_size"] = cfg.image_size;
    manifest["splits"] = {{"train_seen", data.train.size()},
                          {"unlabeled_mixed", data.unlabeled.size()},
                          {"test", data.test.size()}};
    manifest["num_classes"] = k;
    write_text(out_dir + "/manifest.json", manifest.dump(2));
}

DataBundle load_data(const std::string& dir) {
    DataBundle data;
    json j = json::parse(read_text(dir + "/catalog.json"));
    data.catalog.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jc : j.at("classes")) {
        ClassDef c;
        c.id = jc.at("id").get<int>();
        c.name = jc.at("name").get<std::string>();
        c.is_background = jc.at("background").get<bool>();
        c.shape = shape_from(jc.at("shape").get<std::string>());
        c.color = color_from(jc.at("color").get<std::string>());
        c.zone = zone_from(jc.at("zone").get<std::string>());
        data.catalog.classes.push_back(c);
    }
    for (int id : j.at("seen").get<std::vector<int>>()) data.catalog.seen.insert(id);
    for (int id : j.at("unseen").get<std::vector<int>>()) data.catalog.unseen.insert(id);

    auto records = read_container(dir + "/catalog.bin");
    const auto& emb = find_record(records, "embeddings");
    std::size_t k = emb.shape[0], d = emb.shape[1];
    data.catalog.embeddings.dim = d;
    for (std::size_t id = 0; id < k; ++id)
        data.catalog.embeddings.entries[static_cast<int>(id)] =
            std::vector<double>(emb.data.begin() + id * d, emb.data.begin() + (id + 1) * d);

    data.train = read_split(dir + "/train.bin", data.catalog);
    data.unlabeled = read_split(dir + "/unlabeled.bin", data.catalog);
    data.test = read_split(dir + "/test.bin", data.catalog);
    return data;
}

std::unique_ptr<Trainer<float>> make_trainer(const RunConfig& cfg, const DataBundle& data) {
    return std::make_unique<Trainer<float>>(cfg, data.catalog, data.train, data.unlabeled,
                                            data.test);
}

// ---------------------------------------------------------------------------
// checkpointing

namespace {

TensorRecord scalar_record(const std::string& name, float v) {
    return TensorRecord{name, {1}, {v}};
}

TensorRecord string_record(const std::string& name, const std::string& text) {
    TensorRecord r{name, {text.size()}, {}};
    r.data.reserve(text.size());
    for (unsigned char c : text) r.data.push_back(static_cast<float>(c));
    return r;
}

std::string record_string(const TensorRecord& r) {
    std::string s;
    s.reserve(r.data.size());
    for (float f : r.data) s.push_back(static_cast<char>(static_cast<unsigned char>(f)));
    return s;
}

void append_optimizer(std::vector<TensorRecord>& records, const std::string& prefix,
                      Optimizer<float>& opt) {
    records.push_back(scalar_record(prefix + "/step", static_cast<float>(opt.step_count())));
    if (opt.mode() == OptMode::Adam) {
        for (std::size_t i = 0; i < opt.moments_m().size(); ++i) {
            records.push_back(TensorRecord{prefix + "/m/" + std::to_string(i),
                                           {opt.moments_m()[i].size()},
                                           opt.moments_m()[i]});
            records.push_back(TensorRecord{prefix + "/v/" + std::to_string(i),
                                           {opt.moments_v()[i].size()},
                                           opt.moments_v()[i]});
        }
    }
}

void restore_optimizer(const std::vector<TensorRecord>& records, const std::string& prefix,
                       Optimizer<float>& opt) {
    opt.set_step_count(
        static_cast<long>(find_record(records, prefix + "/step").data[0]));
    if (opt.mode() == OptMode::Adam) {
        for (std::size_t i = 0; i < opt.moments_m().size(); ++i) {
            opt.moments_m()[i] = find_record(records, prefix + "/m/" + std::to_string(i)).data;
            opt.moments_v()[i] = find_record(records, prefix + "/v/" + std::to_string(i)).data;
        }
    }
}

} // namespace

void save_checkpoint(Trainer<float>& t, const std::string& path) {
    std::vector<TensorRecord> records;
    records.push_back(string_record("meta/config", t.config().to_json()));
    records.push_back(
        scalar_record("meta/num_classes", static_cast<float>(t.catalog().num_classes())));
    for (const auto& p : t.bundle().named_params()) {
        TensorRecord r;
        r.name = p.name;
        for (std::size_t e : p.tensor.shape()) r.shape.push_back(e);
        r.data = p.tensor.data();
        records.push_back(std::move(r));
    }
    append_optimizer(records, "opt/main", t.main_opt());
    append_optimizer(records, "opt/gen", t.gen_opt());
    append_optimizer(records, "opt/dis", t.disc_opt());
    append_optimizer(records, "opt/transfer", t.transfer_opt());
    append_optimizer(records, "opt/self", t.selftrain_opt());
    write_container(path, records);
}

void load_checkpoint(Trainer<float>& t, const std::string& path) {
    t.invalidate_feature_cache();
    auto records = read_container(path);
    std::size_t k =
        static_cast<std::size_t>(find_record(records, "meta/num_classes").data[0]);
    if (k != t.catalog().num_classes())
        throw IoError("checkpoint classifier K=" + std::to_string(k) +
                      " does not match catalog K=" +
                      std::to_string(t.catalog().num_classes()));
    for (auto& p : t.bundle().named_params()) {
        const auto& r = find_record(records, p.name);
        if (r.data.size() != p.tensor.numel())
            throw IoError("checkpoint record '" + p.name + "' has wrong size");
        Tensor<float> tensor = p.tensor;
        tensor.mutable_data() = r.data;
    }
    restore_optimizer(records, "opt/main", t.main_opt());
    restore_optimizer(records, "opt/gen", t.gen_opt());
    restore_optimizer(records, "opt/dis", t.disc_opt());
    restore_optimizer(records, "opt/transfer", t.transfer_opt());
    restore_optimizer(records, "opt/self", t.selftrain_opt());
}

RunConfig checkpoint_config(const std::string& path) {
    auto records = read_container(path);
    return RunConfig::from_json(record_string(find_record(records, "meta/config")));
}

// ---------------------------------------------------------------------------
// commands

namespace {

std::string run_id_of(const RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(
                      hash_combine(cfg.config_hash(), "run", cfg.seed)));
    return buf;
}

json report_json(const StageReport& rep) {
    json j;
    j["stage"] = rep.stage;
    j["steps"] = rep.steps;
    j["wall_time"] = rep.wall_time;
    j["seed"] = rep.seed;
    j["loss_series"] = rep.loss_series;
    return j;
}

json gzsl_json(const GzslReport& rep) {
    json j;
    j["seen"] = rep.seen_miou;
    j["unseen"] = rep.unseen_miou;
    j["harmonic"] = rep.harmonic;
    j["defined"] = rep.defined;
    return j;
}

json metrics_json(const RunConfig& cfg, const std::vector<StageReport>& reports,
                  const GzslReport& gzsl) {
    json j;
    j["run_id"] = run_id_of(cfg);
    j["seed"] = cfg.seed;
    j["config_hash"] = cfg.config_hash();
    j["stage_reports"] = json::array();
    for (const auto& r : reports) j["stage_reports"].push_back(report_json(r));
    j["gzsl"] = gzsl_json(gzsl);
    json iou;
    for (const auto& [id, v] : gzsl.per_class) iou[std::to_string(id)] = v;
    j["per_class_iou"] = iou;
    return j;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir);
}

} // namespace

std::string cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    DataBundle data = generate_data(cfg);
    write_data(data, cfg, out_dir);
    return read_text(out_dir + "/manifest.json");
}

std::string cmd_train(const RunConfig& cfg) {
    if (cfg.data_dir.empty()) throw IoError("cmd_train: data_dir is required");
    if (cfg.out_dir.empty()) throw IoError("cmd_train: out_dir is required");
    ensure_out_dir(cfg.out_dir);

    DataBundle data = load_data(cfg.data_dir);
    auto trainer = make_trainer(cfg, data);
    if (!cfg.resume.empty()) load_checkpoint(*trainer, cfg.resume);

    std::vector<StageReport> reports;
    reports.push_back(trainer->run_sim_g());
    reports.push_back(trainer->run_transfer());
    GzslReport gzsl = trainer->evaluate_test();

    save_checkpoint(*trainer, cfg.out_dir + "/checkpoint.bin");
    std::string metrics = metrics_json(cfg, reports, gzsl).dump(2);
    write_text(cfg.out_dir + "/metrics.json", metrics);
    return metrics;
}

std::string cmd_selftrain(const RunConfig& cfg, const std::string& checkpoint_path) {
    if (cfg.data_dir.empty()) throw IoError("cmd_selftrain: data_dir is required");
    if (cfg.out_dir.empty()) throw IoError("cmd_selftrain: out_dir is required");
    ensure_out_dir(cfg.out_dir);

    DataBundle data = load_data(cfg.data_dir);
    auto trainer = make_trainer(cfg, data);
    load_checkpoint(*trainer, checkpoint_path);

    GzslReport before = trainer->evaluate_test();
    StageReport rep = trainer->self_train_round(cfg.strategy);
    GzslReport after = trainer->evaluate_test();

    save_checkpoint(*trainer, cfg.out_dir + "/checkpoint_selftrain.bin");
    json j = metrics_json(cfg, {rep}, after);
    j["strategy"] = strategy_name(cfg.strategy);
    j["temperature"] = cfg.temperature;
    j["keep_fraction"] = cfg.keep_fraction;
    j["gzsl_before"] = gzsl_json(before);
    std::string metrics = j.dump(2);
    write_text(cfg.out_dir + "/metrics_selftrain.json", metrics);
    return metrics;
}

std::string cmd_eval(const std::string& checkpoint_path, const std::string& data_dir) {
    RunConfig cfg = checkpoint_config(checkpoint_path);
    DataBundle data = load_data(data_dir);
    if (data.test.empty()) throw MetricUndefined("empty test set");
    auto trainer = make_trainer(cfg, data);
    load_checkpoint(*trainer, checkpoint_path);
    GzslReport rep = trainer->evaluate_test();
    if (!rep.defined) throw MetricUndefined("mIoU undefined: a class set has zero union");

    char row[128];
    std::snprintf(row, sizeof row, "seen %.2f unseen %.2f harmonic %.2f",
                  100.0 * rep.seen_miou, 100.0 * rep.unseen_miou, 100.0 * rep.harmonic);
    std::cout << row << "\n";

    json j = metrics_json(cfg, {}, rep);
    j["row"] = row;
    return j.dump(2);
}

std::string cmd_ablate(const RunConfig& base, const std::string& axis,
                       const std::vector<std::string>& values_in,
                       const std::vector<std::uint64_t>& seeds_in) {
    if (base.out_dir.empty()) throw IoError("cmd_ablate: out_dir is required");
    ensure_out_dir(base.out_dir);

    std::vector<std::string> values = values_in;
    if (values.empty()) {
        if (axis == "pe") values = {"none", "ape", "ape-interp", "rpe"};
        else if (axis == "temperature") values = {"0.5", "1", "2", "4", "8"};
        else if (axis == "sim-arch") values = {"conv", "attention", "self-attn", "mhsa"};
        else throw ValueError("unknown ablation axis: " + axis);
    }
    std::vector<std::uint64_t> seeds = seeds_in;
    if (seeds.empty()) seeds = {base.seed};

    json table = json::array();
    std::ostringstream csv;
    csv << "axis,value,seed,seen,unseen,harmonic,status\n";
    char buf[256];

    for (const auto& value : values) {
        std::vector<double> harmonics;
        json rows = json::array();
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.seed = seed;
            if (axis == "pe") cfg.pe_mode = pe_mode_from(value);
            else if (axis == "temperature") cfg.temperature = std::stod(value);
            else if (axis == "sim-arch") cfg.sim_arch = sim_arch_from(value);
            else throw ValueError("unknown ablation axis: " + axis);

            json row;
            row["value"] = value;
            row["seed"] = seed;
            try {
                DataBundle data = generate_data(cfg);
                auto trainer = make_trainer(cfg, data);
                trainer->run_sim_g();
                trainer->run_transfer();
                if (axis == "temperature")
                    trainer->self_train_round(SelfTrainStrategy::Ast);
                GzslReport rep = trainer->evaluate_test();
                row["seen"] = rep.seen_miou;
                row["unseen"] = rep.unseen_miou;
                row["harmonic"] = rep.harmonic;
                row["status"] = "ok";
                harmonics.push_back(rep.harmonic);
                std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.6f,%.6f,%.6f,ok\n",
                              axis.c_str(), value.c_str(),
                              static_cast<unsigned long long>(seed), rep.seen_miou,
                              rep.unseen_miou, rep.harmonic);
            } catch (const std::exception& e) {
                row["status"] = std::string("failed: ") + e.what();
                std::snprintf(buf, sizeof buf, "%s,%s,%llu,,,,failed\n", axis.c_str(),
                              value.c_str(), static_cast<unsigned long long>(seed));
            }
            csv << buf;
            rows.push_back(row);
        }
        double mean = 0, sd = 0;
        for (double h : harmonics) mean += h;
        if (!harmonics.empty()) mean /= harmonics.size();
        for (double h : harmonics) sd += (h - mean) * (h - mean);
        sd = harmonics.size() > 1 ? std::sqrt(sd / (harmonics.size() - 1)) : 0.0;
        json entry;
        entry["value"] = value;
        entry["runs"] = rows;
        entry["harmonic_mean"] = mean;
        entry["harmonic_sd"] = sd;
        entry["completed"] = harmonics.size();
        table.push_back(entry);
    }

    json j;
    j["axis"] = axis;
    j["table"] = table;
    std::string out = j.dump(2);
    write_text(base.out_dir + "/ablate_" + axis + ".json", out);
    write_text(base.out_dir + "/ablate_" + axis + ".csv", csv.str());
    return out;
}

} // namespace zss
