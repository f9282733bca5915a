#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "noiselab/engine.hpp"
#include "noiselab/manifest.hpp"
#include "noiselab/model.hpp"
#include "noiselab/train.hpp"

namespace noiselab::cli {

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

struct SynthesizeOptions {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t count = 0;        // corrupted samples to generate
    std::size_t image_size = 32;
    std::size_t channels = 1;
    std::size_t clean_pool = 16;  // procedural clean images (ignored with source_dir)
    std::string source_dir;       // optional: use images from here as clean sources
    std::string texture_family = "all";
    double texture_lo = 0.0;
    double texture_hi = 1.0;
    std::vector<Primitive> order = default_order();
    std::string poisson_mode = "additive";  // additive | centered
    std::string quant_mode = "dithered";    // dithered | additive_uniform
    std::size_t workers = 1;
};

/// Writes clean + corrupted tensors and manifest.jsonl under out_dir.
/// Deterministic for a fixed seed, independent of worker count.
Manifest cmd_synthesize(const SynthesizeOptions& opts);

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string manifest_path;
    std::string mode; // pretrain | finetune | scratch | joint
    std::string init_checkpoint; // required for finetune
    std::string out_checkpoint;
    std::string log_csv;         // optional per-epoch loss log
    EncoderConfig encoder;
    std::uint64_t seed = 0;
    // Schedule knobs; steps_per_epoch and tau apply to the contrastive modes.
    std::size_t epochs = 20;
    std::size_t steps_per_epoch = 16;
    std::size_t batch = 8;
    double lr = 0.5;
    double tau = 0.1;
    double val_fraction = 0.2; // tail fraction of the dataset used for val logging
};

EncoderCheckpoint cmd_train(const TrainOptions& opts);

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateOptions {
    std::string checkpoint_path;
    std::string manifest_path;
    std::string out_csv;
    std::size_t windows = 5;
    std::size_t window_size = 0; // 0: use the model input size
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string role_filter = "corrupted"; // corrupted | external | all
};

struct PredictionRow {
    std::string id;
    std::size_t windows = 0;
    NoiseStrengths mean;
    NoiseStrengths stddev;
};

struct PredictionFile {
    std::vector<PredictionRow> rows;
    std::string checkpoint_digest;
    std::string manifest_digest;
    std::uint64_t seed = 0;
};

/// Windowed estimation: per image, `windows` uniformly placed crops are
/// predicted and averaged. Emits one CSV row per image with per-component
/// means and stddevs plus provenance columns.
PredictionFile cmd_estimate(const EstimateOptions& opts);

PredictionFile read_predictions_csv(const std::string& path);

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct MetricRecord {
    std::string metric;
    std::string subset;
    double value = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t n = 0;
};

struct SankeyFlow {
    std::string source_feature;
    std::string target_noise;
    double mean_abs_shap = 0.0;
};

struct AnalysisReport {
    std::vector<MetricRecord> records;
    std::vector<SankeyFlow> sankey;
    std::string checkpoint_digest;
    std::string manifest_digest;
    std::uint64_t seed = 0;
};

struct AnalyzeOptions {
    std::string predictions_csv;
    std::string manifest_path;
    std::string out_prefix; // writes <prefix>.csv, <prefix>.json, <prefix>_sankey.csv
    std::vector<std::string> analyses = {"metrics", "residual", "classification"};
    std::vector<double> thresholds; // empty: 0.0 .. 1.0 step 0.05
    std::string depth_arm_key = "arm";
    std::uint64_t seed = 0;
};

/// Runs the requested analyses; analyses whose inputs are missing are
/// recorded as skipped entries instead of failing the run.
AnalysisReport cmd_analyze(const AnalyzeOptions& opts);

void write_report(const AnalysisReport& report, const std::string& out_prefix);

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
    std::size_t images = 100;
    std::size_t image_size = 32;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
};

struct BenchReport {
    double synth_images_per_sec = 0.0;
    double infer_images_per_sec = 0.0;
    double train_epoch_seconds = 0.0;
};

BenchReport cmd_bench(const BenchOptions& opts);

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

/// Channel adaptation for estimation on foreign data: 3->1 averages,
/// 1->3 replicates; anything else is an error.
ImageTensor to_channels(const ImageTensor& x, std::size_t channels);

std::string format_double(double v); // locale-free %.12g; nan/inf spelled out

/// Echoes the resolved options of a command into <dir>/config.resolved.json.
void write_resolved_config(const std::string& dir, const std::string& command,
                           const std::vector<std::pair<std::string, std::string>>& kv);

} // namespace noiselab::cli
