#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "noiselab/engine.hpp"
#include "noiselab/rng.hpp"
#include "noiselab/tensor.hpp"

namespace noiselab {

/// Compact convolutional encoder description. Each conv stage is 3x3 with
/// stride 2 and unit padding; fc_dims are hidden widths between the
/// flattened conv features and the linear embedding layer.
struct EncoderConfig {
    std::size_t input_size = 32;
    std::size_t in_channels = 1;
    std::vector<std::size_t> conv_channels = {8, 16};
    std::vector<std::size_t> fc_dims = {128};
    std::size_t embed_dim = 64; // must be >= 8
    std::string activation = "tanh"; // tanh | relu | abs
    std::uint64_t init_seed = 0;
    bool normalize_embeddings = true;

    void validate() const; // throws std::invalid_argument

    bool operator==(const EncoderConfig&) const = default;
};

enum class TrainStage { Pretrained, Finetuned };

std::string_view train_stage_name(TrainStage s);
TrainStage train_stage_from_name(std::string_view name);

/// Encoder + quantification-head parameters with training provenance.
struct EncoderCheckpoint {
    EncoderConfig config;
    std::vector<double> encoder_params;
    std::vector<double> head_params;
    TrainStage stage = TrainStage::Pretrained;

    // Provenance. The generator name pins the draw semantics the run used;
    // the kernel id pins the anisotropic smoothing kernel.
    std::string rng_kind = "splitmix64-path-v1";
    std::uint64_t root_seed = 0;
    std::string aniso_kernel_id = "binomial5x5";
    std::uint64_t train_log_digest = 0;
};

/// Feed-forward encoder over a fixed parameter layout. The class itself is
/// stateless apart from shape bookkeeping; parameters travel as flat spans
/// so checkpoints, optimizers and the gradient checker share one format.
class EncoderNet {
public:
    explicit EncoderNet(EncoderConfig cfg);

    const EncoderConfig& config() const { return cfg_; }
    std::size_t param_count() const { return param_count_; }

    /// Deterministic initialization from config.init_seed.
    std::vector<double> init_params() const;

    /// Per-layer activation and pre-activation buffers kept for backward.
    struct Trace {
        std::vector<std::vector<double>> acts; // acts[0] = input
        std::vector<std::vector<double>> pres; // pre-activations per layer
        std::vector<double> pre_norm;          // embedding before normalization
        double inv_norm = 1.0;
    };

    /// Forward pass; returns the (optionally L2-normalized) embedding.
    std::vector<double> forward(const ImageTensor& x, std::span<const double> params,
                                Trace* trace = nullptr) const;

    /// Accumulates dLoss/dParams given the trace of the matching forward
    /// call and dLoss/dEmbedding.
    void backward(const Trace& trace, std::span<const double> params,
                  std::span<const double> d_embedding, std::span<double> d_params) const;

private:
    struct ConvShape {
        std::size_t in_c, out_c, in_hw, out_hw, w_offset, b_offset;
    };
    struct FcShape {
        std::size_t in_dim, out_dim, w_offset, b_offset;
        bool activated;
    };

    EncoderConfig cfg_;
    std::vector<ConvShape> convs_;
    std::vector<FcShape> fcs_;
    std::size_t param_count_ = 0;
};

/// Linear layer with a per-component logistic link, mapping embeddings to
/// the six strength components in [0, 1].
class QuantHead {
public:
    explicit QuantHead(std::size_t embed_dim);

    std::size_t param_count() const { return (embed_dim_ + 1) * kStrengthCount; }
    std::vector<double> init_params(const RngStream& rng) const;

    struct Trace {
        std::vector<double> input;
        std::array<double, kStrengthCount> output{};
    };

    NoiseStrengths forward(std::span<const double> embedding, std::span<const double> params,
                           Trace* trace = nullptr) const;

    /// Accumulates parameter gradients; optionally returns dLoss/dEmbedding.
    void backward(const Trace& trace, std::span<const double> params,
                  std::span<const double> d_output, std::span<double> d_params,
                  std::span<double> d_embedding) const;

private:
    std::size_t embed_dim_;
};

/// Deterministic forward pass through a checkpoint's encoder.
/// Throws std::invalid_argument when x does not match the configured shape.
std::vector<double> encode(const EncoderCheckpoint& model, const ImageTensor& x);

/// Head prediction; requires a finetuned checkpoint.
NoiseStrengths predict_strengths(const EncoderCheckpoint& model, const ImageTensor& x);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// One contrastive batch as embeddings. Anchor i pairs with positive i
/// (different clean content, same noise gene); its negatives are the
/// anchor's own clean content corrupted by the other genes in the batch,
/// so negatives[i] holds one embedding per contrasted gene.
struct ContrastiveBatch {
    std::vector<std::vector<double>> anchors;
    std::vector<std::vector<double>> positives;
    std::vector<std::vector<std::vector<double>>> negatives;
    double tau = 0.1;
};

/// Mean over the batch of -log( exp(s+ / tau) / (exp(s+ / tau) +
/// sum_j exp(s-_ij / tau)) ) with s the embedding dot products.
/// Non-negative; exactly 0 when an anchor has no negatives.
double info_nce_loss(const ContrastiveBatch& batch);

/// Same value, plus dLoss/dEmbedding for every role (shapes mirror the
/// batch). Gradients are with respect to the embeddings as given.
double info_nce_loss_grad(const ContrastiveBatch& batch,
                          std::vector<std::vector<double>>& d_anchors,
                          std::vector<std::vector<double>>& d_positives,
                          std::vector<std::vector<std::vector<double>>>& d_negatives);

/// Mean squared L2 norm of the six-component residuals.
double mse_head_loss(std::span<const NoiseStrengths> pred,
                     std::span<const NoiseStrengths> truth);

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

enum class LossKind { Contrastive, Mse };

/// Raw inputs for one gradient-check batch. Contrastive uses the grouped
/// fields (negatives[i] belongs to anchor i); Mse uses inputs/targets.
struct GradCheckBatch {
    std::vector<ImageTensor> anchors, positives;
    std::vector<std::vector<ImageTensor>> negatives;
    std::vector<ImageTensor> inputs;
    std::vector<NoiseStrengths> targets;
    double tau = 0.1;
};

/// Compares the analytic gradient against central finite differences for
/// every parameter (encoder followed by head) and returns the largest
/// relative error |g_a - g_fd| / max(1, |g_a|, |g_fd|).
///
/// epsilon must lie in [1e-7, 1e-3]. Throws NumericFailure when the loss is
/// not finite.
double grad_check(const EncoderConfig& cfg, std::span<const double> encoder_params,
                  std::span<const double> head_params, LossKind kind,
                  const GradCheckBatch& batch, double epsilon);

} // namespace noiselab
