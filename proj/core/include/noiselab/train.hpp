#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "noiselab/engine.hpp"
#include "noiselab/model.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

struct LabeledImage {
    ImageTensor image;
    NoiseStrengths strengths;
};

/// One contrastive group: the anchor and positive share a noise gene applied
/// to different clean sources; each negative re-corrupts the anchor's own
/// clean source with one contrasted gene, so content is held fixed and only
/// the noise differs.
struct ContrastiveGroup {
    ImageTensor anchor;
    ImageTensor positive;
    std::vector<ImageTensor> negatives;
    NoiseStrengths anchor_eta;
    std::vector<NoiseStrengths> negative_etas;
};

/// One noise gene: a strength vector plus the stream governing its
/// per-stage draws.
struct NoiseGene {
    NoiseStrengths eta;
    RngStream field;
};

/// Fresh gene from a stream: eta from child("eta", 0), field child("field", 0).
NoiseGene sample_gene(const RngStream& gene_stream);

/// Gene from the wider pretraining genome: with probability
/// `single_source_fraction` a single-source gene (one primitive at a uniform
/// intensity in [0.05, 0.8], salt & pepper capped at 0.5), otherwise a
/// softmax-mixed gene. Single-source genes make gene pairs far more
/// discriminable, which the contrastive stage needs at small scale.
NoiseGene sample_pretrain_gene(const RngStream& gene_stream,
                               double single_source_fraction = 0.5);

/// Corrupts (clean_a, clean_b) into a contrastive group against the given
/// contrast genes. With shared_draws the positive reuses the anchor gene's
/// field stream, so both corruptions share the identical per-stage
/// randomness; otherwise only the strengths are shared. `salt` decorrelates
/// negative realizations between groups contrasting the same genes.
ContrastiveGroup make_contrastive_group(const ImageTensor& clean_a,
                                        const ImageTensor& clean_b, const NoiseGene& gene_a,
                                        std::span<const NoiseGene> contrast_genes,
                                        bool shared_draws = true, std::uint64_t salt = 0,
                                        const std::vector<Primitive>& order = default_order());

struct PretrainSchedule {
    std::size_t epochs = 20;
    std::size_t steps_per_epoch = 16;
    std::size_t batch = 8; // groups per step; each anchor contrasts batch-1 genes
    double lr = 0.5;
    double momentum = 0.0;
    double tau = 0.1;
    bool shared_draws = true;
    double single_source_fraction = 0.5; // pretraining genome mix
};

struct HeadSchedule {
    std::size_t epochs = 40;
    std::size_t batch = 16;
    double lr = 0.5;
    double momentum = 0.0;
};

struct JointSchedule {
    std::size_t epochs = 40;
    std::size_t batch = 8; // groups per step
    double lr = 0.5;
    double momentum = 0.0;
    double tau = 0.1;
};

struct TrainLogRow {
    std::size_t epoch = 0;
    std::string split; // "train" | "val"
    double loss = 0.0;
};

/// Stage 1: contrastive pretraining with on-the-fly triplet synthesis from a
/// pool of clean images. Requires at least two clean images. The returned
/// checkpoint carries a freshly initialized head so it is self-contained.
EncoderCheckpoint pretrain(const EncoderConfig& config,
                           std::span<const ImageTensor> clean_images,
                           const PretrainSchedule& schedule, const RngStream& rng,
                           std::vector<TrainLogRow>* log = nullptr);

/// Stage 2: head-only regression on labeled samples. The encoder block is
/// carried over byte-for-byte; only head parameters move. Requires a
/// pretrained-stage checkpoint.
EncoderCheckpoint finetune(const EncoderCheckpoint& pretrained,
                           std::span<const LabeledImage> data, const HeadSchedule& schedule,
                           const RngStream& rng, std::vector<TrainLogRow>* log = nullptr,
                           std::span<const LabeledImage> val = {});

/// Baseline arm: encoder and head trained together on the regression loss
/// from a fresh initialization.
EncoderCheckpoint train_scratch(const EncoderConfig& config,
                                std::span<const LabeledImage> data,
                                const HeadSchedule& schedule, const RngStream& rng,
                                std::vector<TrainLogRow>* log = nullptr,
                                std::span<const LabeledImage> val = {});

/// Joint arm: contrastive and regression losses summed 1:1 over a fixed
/// group set, training encoder and head together.
EncoderCheckpoint train_joint(const EncoderConfig& config,
                              std::span<const ContrastiveGroup> groups,
                              const JointSchedule& schedule, const RngStream& rng,
                              std::vector<TrainLogRow>* log = nullptr,
                              std::span<const LabeledImage> val = {});

/// Head-through-encoder MSE of a checkpoint on a labeled set, regardless of
/// the checkpoint's stage flag.
double eval_mse(const EncoderCheckpoint& model, std::span<const LabeledImage> data);

struct JointLossParts {
    double contrastive = 0.0;
    double mse = 0.0;
    double total = 0.0;
};

/// The joint objective split into its two addends, computed exactly as the
/// joint trainer does.
JointLossParts joint_loss_parts(const EncoderConfig& config,
                                std::span<const double> encoder_params,
                                std::span<const double> head_params,
                                std::span<const ContrastiveGroup> batch, double tau);

} // namespace noiselab
