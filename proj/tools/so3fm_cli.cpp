// Command-line surface: `verify` replays the analytic results against their
// Monte-Carlo and refinement oracles, `train` runs the two-stage
// semi-supervised protocol on the synthetic rotation-regression task,
// `eval` scores a saved model, and `viz` renders per-axis marginal density
// heat maps as PPM images.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "so3fm/io.hpp"
#include "so3fm/verify.hpp"
#include "so3fm/viz.hpp"

namespace {

int cmd_verify(bool fast, std::uint64_t seed) {
    so3fm::VerifyOptions opt;
    opt.fast = fast;
    opt.seed = seed;
    const auto rows = so3fm::run_verify_suite(opt);
    std::fputs(so3fm::format_verify_table(rows).c_str(), stdout);
    for (const auto& r : rows) {
        if (!r.pass) return 1;
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
    const so3fm::TrainConfig cfg = so3fm::load_train_config(config_path);
    std::filesystem::create_directories(out_dir);

    so3fm::Rng master(cfg.seed);
    so3fm::Rng data_rng = master.fork(1);
    so3fm::Rng pre_rng = master.fork(2);
    so3fm::Rng ssl_rng = master.fork(3);

    const so3fm::Datasets data = so3fm::make_datasets(cfg, data_rng);
    const so3fm::PretrainResult pre = so3fm::pretrain(cfg, data.labeled, pre_rng);
    std::printf("pretrain: %ld steps, final smoothed loss %.6f\n", pre.steps_run,
                pre.loss_history.empty() ? 0.0 : pre.loss_history.back());
    const so3fm::SslResult ssl = so3fm::ssl_train(cfg, data, pre.model, ssl_rng);

    const std::string csv_path = out_dir + "/metrics.csv";
    so3fm::write_file(csv_path, so3fm::history_csv(ssl.history));
    so3fm::write_model(out_dir + "/model.bin", out_dir + "/model.bin.json", ssl.student,
                       cfg.head);
    so3fm::write_file(out_dir + "/run_manifest.json",
                      so3fm::run_manifest(cfg).dump(2) + "\n");
    so3fm::write_file(out_dir + "/eval_report.json",
                      so3fm::eval_report_to_json(ssl.final_report).dump(2) + "\n");

    std::printf("tau: %.6f\n", ssl.tau);
    std::printf("final: mean %.3f deg, median %.3f deg, acc30 %.4f, spearman %.4f\n",
                ssl.final_report.mean_error_deg, ssl.final_report.median_error_deg,
                ssl.final_report.acc_30deg, ssl.final_report.entropy_error_spearman);
    std::printf("outputs written to %s\n", out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& config_path) {
    const so3fm::TrainConfig cfg = so3fm::load_train_config(config_path);
    const so3fm::Regressor model =
        so3fm::load_model(model_path, model_path + ".json");
    so3fm::Rng master(cfg.seed);
    so3fm::Rng data_rng = master.fork(1);
    const so3fm::Datasets data = so3fm::make_datasets(cfg, data_rng);
    const so3fm::EvalReport report = so3fm::evaluate(model, data.test, cfg);
    std::printf("%s\n", so3fm::eval_report_to_json(report).dump(2).c_str());
    return 0;
}

int cmd_viz(const std::string& a_csv, const std::string& out_prefix, int width,
            int height, int ring_samples) {
    std::vector<double> vals;
    std::stringstream ss(a_csv);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    if (vals.size() != 9) {
        throw std::invalid_argument("--A expects 9 comma-separated values a11,...,a33");
    }
    so3fm::Mat3 a;
    a << vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6], vals[7], vals[8];
    const so3fm::FisherParams f(a);
    const char* suffix[3] = {"_x.ppm", "_y.ppm", "_z.ppm"};
    for (int axis = 1; axis <= 3; ++axis) {
        const auto img = so3fm::render_axis_marginal(f, axis, width, height, ring_samples);
        so3fm::write_file(out_prefix + suffix[axis - 1], so3fm::encode_ppm(img));
    }
    std::printf("wrote %s_{x,y,z}.ppm\n", out_prefix.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotation-distribution toolkit: matrix Fisher / Bingham "
                 "distributions on SO(3) with a semi-supervised trainer"};
    app.require_subcommand(1);

    auto* verify = app.add_subcommand("verify", "run the oracle verification suite");
    bool fast = false;
    std::uint64_t seed = 0;
    verify->add_flag("--fast", fast, "1e5 Monte-Carlo samples instead of 1e6");
    verify->add_option("--seed", seed, "seed for all randomized checks");

    auto* train = app.add_subcommand("train", "pretrain + semi-supervised training");
    std::string config_path, out_dir = "run_out";
    train->add_option("--config", config_path, "JSON config path")->required();
    train->add_option("--out", out_dir, "output directory");

    auto* eval = app.add_subcommand("eval", "evaluate a saved model");
    std::string model_path, eval_config;
    eval->add_option("--model", model_path, "model .bin path (manifest at <path>.json)")
        ->required();
    eval->add_option("--config", eval_config, "JSON config path")->required();

    auto* viz = app.add_subcommand("viz", "render per-axis marginal density images");
    std::string a_csv, out_prefix = "marginal";
    int width = 256, height = 128, ring_samples = 64;
    viz->add_option("--A", a_csv, "nine comma-separated entries a11,...,a33")->required();
    viz->add_option("--out", out_prefix, "output file prefix");
    viz->add_option("--width", width, "image width");
    viz->add_option("--height", height, "image height");
    viz->add_option("--ring-samples", ring_samples, "ring integration samples");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return cmd_verify(fast, seed);
        if (train->parsed()) return cmd_train(config_path, out_dir);
        if (eval->parsed()) return cmd_eval(model_path, eval_config);
        if (viz->parsed()) return cmd_viz(a_csv, out_prefix, width, height, ring_samples);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
