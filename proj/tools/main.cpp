#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noiselab/engine.hpp"
#include "noiselab/pipeline.hpp"

namespace {

using json = nlohmann::json;
using namespace noiselab;

// Section of the config file for one subcommand; CLI flags override keys.
json config_section(const std::string& config_path, const std::string& command) {
    if (config_path.empty()) return json::object();
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    json j;
    in >> j;
    if (j.contains(command)) return j[command];
    return json::object();
}

template <typename T>
void from_config(const json& section, const char* key, T& value) {
    if (section.contains(key)) value = section[key].get<T>();
}

std::vector<Primitive> parse_order(const std::vector<std::string>& names) {
    std::vector<Primitive> order;
    for (const std::string& n : names) order.push_back(primitive_from_name(n));
    return order;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"noiselab: deterministic noise synthesis, estimation and analysis"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file with per-command sections")
        ->envname("NOISELAB_CONFIG");

    // -- synthesize ----------------------------------------------------------
    auto* synth = app.add_subcommand("synthesize", "Generate corrupted datasets");
    cli::SynthesizeOptions sopts;
    std::vector<std::string> order_names;
    synth->add_option("--out", sopts.out_dir, "Output directory");
    synth->add_option("--seed", sopts.seed, "Root seed");
    synth->add_option("--count", sopts.count, "Corrupted sample count");
    synth->add_option("--size", sopts.image_size, "Square image size");
    synth->add_option("--channels", sopts.channels, "Image channels");
    synth->add_option("--clean-pool", sopts.clean_pool, "Procedural clean image count");
    synth->add_option("--source-dir", sopts.source_dir, "Clean source image directory");
    synth->add_option("--family", sopts.texture_family, "Texture family (smooth|structured|all)");
    synth->add_option("--order", order_names, "Primitive application order");
    synth->add_option("--poisson-mode", sopts.poisson_mode, "additive|centered");
    synth->add_option("--quant-mode", sopts.quant_mode, "dithered|additive_uniform");
    synth->add_option("--workers", sopts.workers, "Parallel synthesis workers");

    // -- train ---------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train or finetune a model");
    cli::TrainOptions topts;
    train->add_option("--manifest", topts.manifest_path, "Dataset manifest")->required();
    train->add_option("--mode", topts.mode, "pretrain|finetune|scratch|joint")->required();
    train->add_option("--init", topts.init_checkpoint, "Initial checkpoint (finetune)");
    train->add_option("--out", topts.out_checkpoint, "Output checkpoint path");
    train->add_option("--log", topts.log_csv, "Per-epoch loss CSV");
    train->add_option("--seed", topts.seed, "Root seed");
    train->add_option("--epochs", topts.epochs, "Epochs");
    train->add_option("--steps-per-epoch", topts.steps_per_epoch, "Pretrain steps per epoch");
    train->add_option("--batch", topts.batch, "Batch size");
    train->add_option("--lr", topts.lr, "Learning rate");
    train->add_option("--tau", topts.tau, "Contrastive temperature");
    train->add_option("--val-fraction", topts.val_fraction, "Validation split fraction");
    train->add_option("--input-size", topts.encoder.input_size, "Encoder input size");
    train->add_option("--channels", topts.encoder.in_channels, "Encoder input channels");
    train->add_option("--embed-dim", topts.encoder.embed_dim, "Embedding dimension");
    train->add_option("--init-seed", topts.encoder.init_seed, "Parameter init seed");

    // -- estimate --------------------------------------------------------------
    auto* est = app.add_subcommand("estimate", "Windowed strength estimation");
    cli::EstimateOptions eopts;
    est->add_option("--checkpoint", eopts.checkpoint_path, "Model checkpoint")->required();
    est->add_option("--manifest", eopts.manifest_path, "Dataset manifest")->required();
    est->add_option("--out", eopts.out_csv, "Predictions CSV path");
    est->add_option("--windows", eopts.windows, "Windows per image");
    est->add_option("--window-size", eopts.window_size, "Window side (default: model input)");
    est->add_option("--seed", eopts.seed, "Window placement seed");
    est->add_option("--workers", eopts.workers, "Parallel inference workers");
    est->add_option("--roles", eopts.role_filter, "corrupted|external|all");

    // -- analyze -----------------------------------------------------------------
    auto* ana = app.add_subcommand("analyze", "Statistical report generation");
    cli::AnalyzeOptions aopts;
    ana->add_option("--predictions", aopts.predictions_csv, "Predictions CSV")->required();
    ana->add_option("--manifest", aopts.manifest_path, "Dataset manifest")->required();
    ana->add_option("--out", aopts.out_prefix, "Report path prefix");
    ana->add_option("--analyses", aopts.analyses,
                    "metrics|residual|classification|correlation|shap|depth|quality");
    ana->add_option("--thresholds", aopts.thresholds, "Threshold grid for classification");
    ana->add_option("--arm-key", aopts.depth_arm_key, "Metadata key naming the depth arm");

    // -- bench -------------------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "Throughput measurements");
    cli::BenchOptions bopts;
    bench->add_option("--images", bopts.images, "Images to synthesize");
    bench->add_option("--size", bopts.image_size, "Image size");
    bench->add_option("--workers", bopts.workers, "Workers");
    bench->add_option("--seed", bopts.seed, "Seed");

    // Apply config-file defaults before parsing so flags win.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) {
            const json cfg = config_section(config_path, "synthesize");
            if (sopts.out_dir.empty()) from_config(cfg, "out", sopts.out_dir);
            if (sopts.count == 0) from_config(cfg, "count", sopts.count);
            if (!synth->count("--seed")) from_config(cfg, "seed", sopts.seed);
            if (!synth->count("--size")) from_config(cfg, "size", sopts.image_size);
            if (!synth->count("--family")) from_config(cfg, "family", sopts.texture_family);
            if (!synth->count("--clean-pool")) from_config(cfg, "clean_pool", sopts.clean_pool);
            if (!synth->count("--workers")) from_config(cfg, "workers", sopts.workers);
            if (!order_names.empty()) sopts.order = parse_order(order_names);
            if (sopts.out_dir.empty())
                throw std::invalid_argument("synthesize: --out is required");
            const Manifest m = cli::cmd_synthesize(sopts);
            std::cout << "synthesize: wrote " << m.records.size() << " records to "
                      << sopts.out_dir << "\n";
        } else if (*train) {
            const json cfg = config_section(config_path, "train");
            if (!train->count("--epochs")) from_config(cfg, "epochs", topts.epochs);
            if (!train->count("--batch")) from_config(cfg, "batch", topts.batch);
            if (!train->count("--lr")) from_config(cfg, "lr", topts.lr);
            if (!train->count("--tau")) from_config(cfg, "tau", topts.tau);
            const EncoderCheckpoint ckpt = cli::cmd_train(topts);
            std::cout << "train: mode=" << topts.mode
                      << " stage=" << train_stage_name(ckpt.stage) << " params="
                      << ckpt.encoder_params.size() + ckpt.head_params.size() << "\n";
        } else if (*est) {
            const cli::PredictionFile pf = cli::cmd_estimate(eopts);
            std::cout << "estimate: " << pf.rows.size() << " images -> "
                      << (eopts.out_csv.empty() ? "(stdout only)" : eopts.out_csv) << "\n";
        } else if (*ana) {
            const cli::AnalysisReport rep = cli::cmd_analyze(aopts);
            std::cout << "analyze: " << rep.records.size() << " metric rows, "
                      << rep.sankey.size() << " sankey flows\n";
        } else if (*bench) {
            const cli::BenchReport rep = cli::cmd_bench(bopts);
            std::cout << "bench: synthesis " << rep.synth_images_per_sec << " images/s, "
                      << "inference " << rep.infer_images_per_sec << " images/s, "
                      << "train epoch " << rep.train_epoch_seconds << " s\n";
            if (bopts.workers > 1)
                std::cout << "bench: note: rates vary with load; bytes are "
                             "worker-count independent\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
