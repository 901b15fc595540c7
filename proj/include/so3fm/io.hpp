#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "so3fm/sha1.hpp"
#include "so3fm/train.hpp"

namespace so3fm {

using nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

// Strict parse: the schema version must match and unknown keys are an
// error, so a typo'd key fails loudly instead of silently using a default.
inline TrainConfig parse_train_config(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    if (!j.contains("schema_version")) {
        throw std::invalid_argument("config: missing schema_version");
    }
    TrainConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "schema_version") cfg.schema_version = value.get<int>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "n_labeled") cfg.n_labeled = value.get<int>();
        else if (key == "n_unlabeled") cfg.n_unlabeled = value.get<int>();
        else if (key == "n_test") cfg.n_test = value.get<int>();
        else if (key == "keypoints") cfg.keypoints = value.get<int>();
        else if (key == "data_noise") cfg.data_noise = value.get<double>();
        else if (key == "hidden") cfg.hidden = value.get<int>();
        else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
        else if (key == "pretrain_steps") cfg.pretrain_steps = value.get<int>();
        else if (key == "ssl_steps") cfg.ssl_steps = value.get<int>();
        else if (key == "batch_labeled") cfg.batch_labeled = value.get<int>();
        else if (key == "batch_unlabeled") cfg.batch_unlabeled = value.get<int>();
        else if (key == "pretrain_early_stop_delta")
            cfg.pretrain_early_stop_delta = value.get<double>();
        else if (key == "lambda_u") cfg.lambda_u = value.get<double>();
        else if (key == "tau") cfg.tau = value.get<double>();
        else if (key == "tau_mode") cfg.tau_mode = value.get<std::string>();
        else if (key == "tau_percentile") cfg.tau_percentile = value.get<double>();
        else if (key == "ema_decay") cfg.ema_decay = value.get<double>();
        else if (key == "weak_noise") cfg.weak_noise = value.get<double>();
        else if (key == "strong_noise") cfg.strong_noise = value.get<double>();
        else if (key == "dropout_prob") cfg.dropout_prob = value.get<double>();
        else if (key == "augment_labeled") cfg.augment_labeled = value.get<bool>();
        else if (key == "unsup_loss") cfg.unsup_loss = value.get<std::string>();
        else if (key == "head") cfg.head = value.get<std::string>();
        else if (key == "n_trapezoids") cfg.n_trapezoids = value.get<int>();
        else if (key == "snapshot_every") cfg.snapshot_every = value.get<int>();
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    if (cfg.schema_version != kConfigSchemaVersion) {
        throw std::invalid_argument("config: unsupported schema_version");
    }
    cfg.validate();
    return cfg;
}

inline json config_to_json(const TrainConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["seed"] = cfg.seed;
    j["n_labeled"] = cfg.n_labeled;
    j["n_unlabeled"] = cfg.n_unlabeled;
    j["n_test"] = cfg.n_test;
    j["keypoints"] = cfg.keypoints;
    j["data_noise"] = cfg.data_noise;
    j["hidden"] = cfg.hidden;
    j["learning_rate"] = cfg.learning_rate;
    j["pretrain_steps"] = cfg.pretrain_steps;
    j["ssl_steps"] = cfg.ssl_steps;
    j["batch_labeled"] = cfg.batch_labeled;
    j["batch_unlabeled"] = cfg.batch_unlabeled;
    j["pretrain_early_stop_delta"] = cfg.pretrain_early_stop_delta;
    j["lambda_u"] = cfg.lambda_u;
    j["tau"] = cfg.tau;
    j["tau_mode"] = cfg.tau_mode;
    j["tau_percentile"] = cfg.tau_percentile;
    j["ema_decay"] = cfg.ema_decay;
    j["weak_noise"] = cfg.weak_noise;
    j["strong_noise"] = cfg.strong_noise;
    j["dropout_prob"] = cfg.dropout_prob;
    j["augment_labeled"] = cfg.augment_labeled;
    j["unsup_loss"] = cfg.unsup_loss;
    j["head"] = cfg.head;
    j["n_trapezoids"] = cfg.n_trapezoids;
    j["snapshot_every"] = cfg.snapshot_every;
    return j;
}

inline TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    return parse_train_config(j);
}

namespace detail {
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline std::string history_csv(const std::vector<SnapshotRow>& history) {
    std::ostringstream out;
    out << "step,mean_err,median_err,acc30,coverage,pl_err,student_pl_err,mean_entropy\n";
    for (const auto& r : history) {
        out << r.step << ',' << detail::fmt_double(r.mean_err) << ','
            << detail::fmt_double(r.median_err) << ',' << detail::fmt_double(r.acc30)
            << ',' << detail::fmt_double(r.coverage) << ','
            << detail::fmt_double(r.pl_err) << ','
            << detail::fmt_double(r.student_pl_err) << ','
            << detail::fmt_double(r.mean_entropy) << '\n';
    }
    return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Model parameters as a flat little-endian double array plus a JSON shape
// manifest next to it.
inline void write_model(const std::string& bin_path, const std::string& manifest_path,
                        const Regressor& model, const std::string& head) {
    const std::vector<double> flat = model.flatten();
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open model file: " + bin_path);
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    const auto dims = model.dims();
    json manifest;
    manifest["schema_version"] = kConfigSchemaVersion;
    manifest["head"] = head;
    manifest["input_dim"] = dims[0];
    manifest["hidden_dim"] = dims[1];
    manifest["output_dim"] = dims[3];
    manifest["parameter_count"] = flat.size();
    write_file(manifest_path, manifest.dump(2) + "\n");
}

inline Regressor load_model(const std::string& bin_path,
                            const std::string& manifest_path) {
    std::ifstream min(manifest_path);
    if (!min) throw std::runtime_error("cannot open model manifest: " + manifest_path);
    json manifest;
    min >> manifest;
    const int in = manifest.at("input_dim").get<int>();
    const int hid = manifest.at("hidden_dim").get<int>();
    const int out = manifest.at("output_dim").get<int>();
    Rng scratch(0);
    Regressor model(in, hid, out, scratch);
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open model file: " + bin_path);
    std::vector<double> flat(manifest.at("parameter_count").get<std::size_t>());
    bin.read(reinterpret_cast<char*>(flat.data()),
             static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (bin.gcount() != static_cast<std::streamsize>(flat.size() * sizeof(double))) {
        throw std::runtime_error("model file truncated: " + bin_path);
    }
    model.unflatten(flat);
    return model;
}

// Run manifest: the exact config plus a content hash over its canonical
// dump, so two runs can be compared for input identity at a glance.
inline json run_manifest(const TrainConfig& cfg) {
    const json cj = config_to_json(cfg);
    json m;
    m["schema_version"] = kConfigSchemaVersion;
    m["config"] = cj;
    m["content_hash"] = sha1_hex(cj.dump());
    return m;
}

inline json eval_report_to_json(const EvalReport& r) {
    json j;
    j["mean_error_deg"] = r.mean_error_deg;
    j["median_error_deg"] = r.median_error_deg;
    j["acc_30deg"] = r.acc_30deg;
    j["entropy_error_spearman"] = r.entropy_error_spearman;
    return j;
}

}  // namespace so3fm
