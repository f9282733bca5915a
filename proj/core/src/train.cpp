#include "noiselab/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noiselab/digest.hpp"

namespace noiselab {

namespace {

std::vector<std::size_t> epoch_permutation(std::size_t n, const RngStream& stream) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    auto sampler = stream.sampler();
    for (std::size_t i = n; i > 1; --i) { // Fisher-Yates
        const std::size_t j = sampler.uniform_below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

// Plain SGD, with classical momentum when requested. A zero learning rate
// leaves parameters bit-identical.
class SgdState {
public:
    SgdState(std::size_t size, double momentum) : momentum_(momentum) {
        if (momentum_ != 0.0) velocity_.assign(size, 0.0);
    }

    void step(std::vector<double>& params, std::span<const double> grad, double lr) {
        if (momentum_ == 0.0) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
            return;
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            velocity_[i] = momentum_ * velocity_[i] + grad[i];
            params[i] -= lr * velocity_[i];
        }
    }

private:
    double momentum_;
    std::vector<double> velocity_;
};

std::uint64_t log_digest(const std::vector<TrainLogRow>& log) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const TrainLogRow& row : log) {
        h = fnv1a64(&row.epoch, sizeof(row.epoch), h);
        h = fnv1a64(row.split.data(), row.split.size(), h);
        h = fnv1a64(&row.loss, sizeof(row.loss), h);
    }
    return h;
}

void push_log(std::vector<TrainLogRow>* log, std::size_t epoch, const char* split,
              double loss) {
    if (log) log->push_back({epoch, split, loss});
}

double val_mse(const EncoderNet& net, const QuantHead& head,
               std::span<const double> enc_params, std::span<const double> head_params,
               std::span<const LabeledImage> val) {
    if (val.empty()) return 0.0;
    std::vector<NoiseStrengths> preds(val.size());
    std::vector<NoiseStrengths> truths(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
        const std::vector<double> z = net.forward(val[i].image, enc_params);
        preds[i] = head.forward(z, head_params);
        truths[i] = val[i].strengths;
    }
    return mse_head_loss(preds, truths);
}

} // namespace

NoiseGene sample_gene(const RngStream& gene_stream) {
    NoiseGene g;
    g.eta = sample_strengths(gene_stream.child("eta", 0));
    g.field = gene_stream.child("field", 0);
    return g;
}

NoiseGene sample_pretrain_gene(const RngStream& gene_stream, double single_source_fraction) {
    auto picker = gene_stream.child("kind", 0).sampler();
    if (picker.uniform01() >= single_source_fraction) return sample_gene(gene_stream);
    NoiseGene g;
    g.field = gene_stream.child("field", 0);
    const std::size_t prim = picker.uniform_below(kStrengthCount - 1); // noise primitives
    double eta = 0.05 + 0.75 * picker.uniform01();
    if (static_cast<Primitive>(prim) == Primitive::SaltPepper) eta = std::min(eta, 0.5);
    g.eta = NoiseStrengths{};
    g.eta[prim] = eta;
    g.eta[Primitive::Clean] = 1.0 - eta;
    return g;
}

ContrastiveGroup make_contrastive_group(const ImageTensor& clean_a,
                                        const ImageTensor& clean_b, const NoiseGene& gene_a,
                                        std::span<const NoiseGene> contrast_genes,
                                        bool shared_draws, std::uint64_t salt,
                                        const std::vector<Primitive>& order) {
    ContrastiveGroup g;
    g.anchor_eta = gene_a.eta;
    g.anchor = compose(clean_a, gene_a.eta, order, gene_a.field).corrupted;
    const RngStream field_pos =
        shared_draws ? gene_a.field : gene_a.field.child("fresh", 0);
    g.positive = compose(clean_b, gene_a.eta, order, field_pos).corrupted;
    g.negatives.reserve(contrast_genes.size());
    g.negative_etas.reserve(contrast_genes.size());
    for (const NoiseGene& gene : contrast_genes) {
        g.negatives.push_back(
            compose(clean_a, gene.eta, order, gene.field.child("on", salt)).corrupted);
        g.negative_etas.push_back(gene.eta);
    }
    return g;
}

EncoderCheckpoint pretrain(const EncoderConfig& config,
                           std::span<const ImageTensor> clean_images,
                           const PretrainSchedule& schedule, const RngStream& rng,
                           std::vector<TrainLogRow>* log) {
    if (clean_images.size() < 2)
        throw std::invalid_argument("pretrain: needs at least two clean images");
    if (schedule.batch == 0) throw std::invalid_argument("pretrain: zero batch size");
    if (!(schedule.tau > 0.0)) throw std::invalid_argument("pretrain: tau must be > 0");

    const EncoderNet net(config);
    const QuantHead head(config.embed_dim);
    EncoderCheckpoint ckpt;
    ckpt.config = config;
    ckpt.encoder_params = net.init_params();
    ckpt.head_params = head.init_params(RngStream::root(config.init_seed).child("head", 0));
    ckpt.stage = TrainStage::Pretrained;
    ckpt.root_seed = rng.root_seed();

    const std::size_t n_clean = clean_images.size();
    std::vector<double> grad(ckpt.encoder_params.size(), 0.0);
    SgdState opt(ckpt.encoder_params.size(), schedule.momentum);

    std::size_t global_step = 0;
    for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < schedule.steps_per_epoch; ++step, ++global_step) {
            const RngStream step_stream = rng.child("step", global_step);

            // One gene per batch slot; anchor i contrasts the other genes
            // applied to its own clean source.
            std::vector<NoiseGene> genes;
            std::vector<std::size_t> ia(schedule.batch), ib(schedule.batch);
            for (std::size_t b = 0; b < schedule.batch; ++b) {
                const RngStream item = step_stream.child("item", b);
                genes.push_back(sample_pretrain_gene(item.child("gene", 0),
                                                     schedule.single_source_fraction));
                auto picker = item.sampler();
                ia[b] = picker.uniform_below(n_clean);
                ib[b] = picker.uniform_below(n_clean);
                while (ib[b] == ia[b]) ib[b] = picker.uniform_below(n_clean);
            }

            ContrastiveBatch cb;
            cb.tau = schedule.tau;
            cb.negatives.resize(schedule.batch);
            std::vector<EncoderNet::Trace> ta(schedule.batch), tp(schedule.batch);
            std::vector<std::vector<EncoderNet::Trace>> tn(schedule.batch);
            for (std::size_t b = 0; b < schedule.batch; ++b) {
                std::vector<NoiseGene> contrast;
                for (std::size_t j = 0; j < schedule.batch; ++j)
                    if (j != b) contrast.push_back(genes[j]);
                const ContrastiveGroup g = make_contrastive_group(
                    clean_images[ia[b]], clean_images[ib[b]], genes[b], contrast,
                    schedule.shared_draws, b);
                cb.anchors.push_back(net.forward(g.anchor, ckpt.encoder_params, &ta[b]));
                cb.positives.push_back(net.forward(g.positive, ckpt.encoder_params, &tp[b]));
                tn[b].resize(g.negatives.size());
                for (std::size_t t = 0; t < g.negatives.size(); ++t)
                    cb.negatives[b].push_back(
                        net.forward(g.negatives[t], ckpt.encoder_params, &tn[b][t]));
            }

            std::vector<std::vector<double>> da, dp;
            std::vector<std::vector<std::vector<double>>> dn;
            epoch_loss += info_nce_loss_grad(cb, da, dp, dn);

            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = 0; b < schedule.batch; ++b) {
                net.backward(ta[b], ckpt.encoder_params, da[b], grad);
                net.backward(tp[b], ckpt.encoder_params, dp[b], grad);
                for (std::size_t t = 0; t < tn[b].size(); ++t)
                    net.backward(tn[b][t], ckpt.encoder_params, dn[b][t], grad);
            }
            opt.step(ckpt.encoder_params, grad, schedule.lr);
        }
        if (schedule.steps_per_epoch > 0)
            push_log(log, epoch,
                     "train", epoch_loss / static_cast<double>(schedule.steps_per_epoch));
    }
    if (log) ckpt.train_log_digest = log_digest(*log);
    return ckpt;
}

namespace {

// Shared mini-batch regression loop. When train_encoder is false the encoder
// parameters are never touched and per-image embeddings are precomputed once.
EncoderCheckpoint run_regression(const EncoderConfig& config,
                                 std::vector<double> encoder_params,
                                 std::vector<double> head_params, bool train_encoder,
                                 std::span<const LabeledImage> data,
                                 const HeadSchedule& schedule, const RngStream& rng,
                                 std::vector<TrainLogRow>* log,
                                 std::span<const LabeledImage> val) {
    if (data.empty()) throw std::invalid_argument("training: empty dataset");
    if (schedule.batch == 0) throw std::invalid_argument("training: zero batch size");

    const EncoderNet net(config);
    const QuantHead head(config.embed_dim);
    const std::size_t n = data.size();

    std::vector<std::vector<double>> frozen_embeddings;
    if (!train_encoder) {
        frozen_embeddings.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            frozen_embeddings[i] = net.forward(data[i].image, encoder_params);
    }

    std::vector<double> enc_grad(train_encoder ? encoder_params.size() : 0, 0.0);
    std::vector<double> head_grad(head_params.size(), 0.0);
    SgdState enc_opt(enc_grad.size(), schedule.momentum);
    SgdState head_opt(head_grad.size(), schedule.momentum);

    for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
        const auto order = epoch_permutation(n, rng.child("epoch", epoch));
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < n; start += schedule.batch, ++steps) {
            const std::size_t end = std::min(n, start + schedule.batch);
            const std::size_t bs = end - start;
            const double scale = 2.0 / static_cast<double>(bs);

            std::fill(head_grad.begin(), head_grad.end(), 0.0);
            if (train_encoder) std::fill(enc_grad.begin(), enc_grad.end(), 0.0);

            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const LabeledImage& item = data[order[k]];
                EncoderNet::Trace trace;
                QuantHead::Trace head_trace;
                NoiseStrengths pred;
                if (train_encoder) {
                    const std::vector<double> z =
                        net.forward(item.image, encoder_params, &trace);
                    pred = head.forward(z, head_params, &head_trace);
                } else {
                    pred = head.forward(frozen_embeddings[order[k]], head_params,
                                        &head_trace);
                }

                std::array<double, kStrengthCount> d_out{};
                for (std::size_t c = 0; c < kStrengthCount; ++c) {
                    const double r = pred[c] - item.strengths[c];
                    batch_loss += r * r;
                    d_out[c] = scale * r;
                }
                std::vector<double> d_embed(train_encoder ? config.embed_dim : 0, 0.0);
                head.backward(head_trace, head_params, d_out, head_grad, d_embed);
                if (train_encoder) net.backward(trace, encoder_params, d_embed, enc_grad);
            }
            epoch_loss += batch_loss / static_cast<double>(bs);

            head_opt.step(head_params, head_grad, schedule.lr);
            if (train_encoder) enc_opt.step(encoder_params, enc_grad, schedule.lr);
        }
        if (steps > 0)
            push_log(log, epoch, "train", epoch_loss / static_cast<double>(steps));
        if (!val.empty())
            push_log(log, epoch, "val", val_mse(net, head, encoder_params, head_params, val));
    }

    EncoderCheckpoint out;
    out.config = config;
    out.encoder_params = std::move(encoder_params);
    out.head_params = std::move(head_params);
    out.stage = TrainStage::Finetuned;
    out.root_seed = rng.root_seed();
    if (log) out.train_log_digest = log_digest(*log);
    return out;
}

} // namespace

EncoderCheckpoint finetune(const EncoderCheckpoint& pretrained,
                           std::span<const LabeledImage> data, const HeadSchedule& schedule,
                           const RngStream& rng, std::vector<TrainLogRow>* log,
                           std::span<const LabeledImage> val) {
    if (pretrained.stage != TrainStage::Pretrained)
        throw std::invalid_argument("finetune: checkpoint stage must be 'pretrained'");
    EncoderCheckpoint out =
        run_regression(pretrained.config, pretrained.encoder_params, pretrained.head_params,
                       /*train_encoder=*/false, data, schedule, rng, log, val);
    out.rng_kind = pretrained.rng_kind;
    out.aniso_kernel_id = pretrained.aniso_kernel_id;
    return out;
}

EncoderCheckpoint train_scratch(const EncoderConfig& config,
                                std::span<const LabeledImage> data,
                                const HeadSchedule& schedule, const RngStream& rng,
                                std::vector<TrainLogRow>* log,
                                std::span<const LabeledImage> val) {
    const EncoderNet net(config);
    const QuantHead head(config.embed_dim);
    return run_regression(config, net.init_params(),
                          head.init_params(RngStream::root(config.init_seed).child("head", 0)),
                          /*train_encoder=*/true, data, schedule, rng, log, val);
}

namespace {

// Images of one group in a fixed order with their regression labels.
struct GroupView {
    std::vector<const ImageTensor*> images;
    std::vector<const NoiseStrengths*> labels;
};

GroupView view_of(const ContrastiveGroup& g) {
    GroupView v;
    v.images.push_back(&g.anchor);
    v.labels.push_back(&g.anchor_eta);
    v.images.push_back(&g.positive);
    v.labels.push_back(&g.anchor_eta);
    for (std::size_t t = 0; t < g.negatives.size(); ++t) {
        v.images.push_back(&g.negatives[t]);
        v.labels.push_back(&g.negative_etas[t]);
    }
    return v;
}

} // namespace

EncoderCheckpoint train_joint(const EncoderConfig& config,
                              std::span<const ContrastiveGroup> groups,
                              const JointSchedule& schedule, const RngStream& rng,
                              std::vector<TrainLogRow>* log,
                              std::span<const LabeledImage> val) {
    if (groups.empty()) throw std::invalid_argument("train_joint: empty group set");
    if (schedule.batch == 0) throw std::invalid_argument("train_joint: zero batch size");
    if (!(schedule.tau > 0.0)) throw std::invalid_argument("train_joint: tau must be > 0");

    const EncoderNet net(config);
    const QuantHead head(config.embed_dim);
    std::vector<double> encoder_params = net.init_params();
    std::vector<double> head_params =
        head.init_params(RngStream::root(config.init_seed).child("head", 0));

    const std::size_t n = groups.size();
    std::vector<double> enc_grad(encoder_params.size(), 0.0);
    std::vector<double> head_grad(head_params.size(), 0.0);
    SgdState enc_opt(enc_grad.size(), schedule.momentum);
    SgdState head_opt(head_grad.size(), schedule.momentum);

    for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
        const auto order = epoch_permutation(n, rng.child("epoch", epoch));
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < n; start += schedule.batch, ++steps) {
            const std::size_t end = std::min(n, start + schedule.batch);
            const std::size_t bs = end - start;

            ContrastiveBatch cb;
            cb.tau = schedule.tau;
            cb.negatives.resize(bs);
            std::vector<std::vector<EncoderNet::Trace>> traces(bs);
            std::vector<std::vector<QuantHead::Trace>> head_traces(bs);
            std::vector<NoiseStrengths> preds, truths;
            std::size_t image_count = 0;
            for (std::size_t k = 0; k < bs; ++k) {
                const ContrastiveGroup& g = groups[order[start + k]];
                const GroupView v = view_of(g);
                traces[k].resize(v.images.size());
                head_traces[k].resize(v.images.size());
                for (std::size_t m = 0; m < v.images.size(); ++m) {
                    std::vector<double> z =
                        net.forward(*v.images[m], encoder_params, &traces[k][m]);
                    preds.push_back(head.forward(z, head_params, &head_traces[k][m]));
                    truths.push_back(*v.labels[m]);
                    if (m == 0)
                        cb.anchors.push_back(std::move(z));
                    else if (m == 1)
                        cb.positives.push_back(std::move(z));
                    else
                        cb.negatives[k].push_back(std::move(z));
                    ++image_count;
                }
            }

            std::vector<std::vector<double>> da, dp;
            std::vector<std::vector<std::vector<double>>> dn;
            const double c_loss = info_nce_loss_grad(cb, da, dp, dn);
            const double m_loss = mse_head_loss(preds, truths);
            epoch_loss += c_loss + m_loss;

            std::fill(enc_grad.begin(), enc_grad.end(), 0.0);
            std::fill(head_grad.begin(), head_grad.end(), 0.0);
            const double scale = 2.0 / static_cast<double>(image_count);
            std::size_t pred_index = 0;
            for (std::size_t k = 0; k < bs; ++k) {
                const std::size_t images = traces[k].size();
                for (std::size_t m = 0; m < images; ++m, ++pred_index) {
                    std::array<double, kStrengthCount> d_out{};
                    for (std::size_t c = 0; c < kStrengthCount; ++c)
                        d_out[c] =
                            scale * (preds[pred_index][c] - truths[pred_index][c]);
                    std::vector<double> d_embed(config.embed_dim, 0.0);
                    head.backward(head_traces[k][m], head_params, d_out, head_grad, d_embed);
                    const std::vector<double>& d_c =
                        m == 0 ? da[k] : m == 1 ? dp[k] : dn[k][m - 2];
                    for (std::size_t i = 0; i < d_embed.size(); ++i) d_embed[i] += d_c[i];
                    net.backward(traces[k][m], encoder_params, d_embed, enc_grad);
                }
            }
            enc_opt.step(encoder_params, enc_grad, schedule.lr);
            head_opt.step(head_params, head_grad, schedule.lr);
        }
        if (steps > 0)
            push_log(log, epoch, "train", epoch_loss / static_cast<double>(steps));
        if (!val.empty())
            push_log(log, epoch, "val", val_mse(net, head, encoder_params, head_params, val));
    }

    EncoderCheckpoint out;
    out.config = config;
    out.encoder_params = std::move(encoder_params);
    out.head_params = std::move(head_params);
    out.stage = TrainStage::Finetuned;
    out.root_seed = rng.root_seed();
    if (log) out.train_log_digest = log_digest(*log);
    return out;
}

double eval_mse(const EncoderCheckpoint& model, std::span<const LabeledImage> data) {
    if (data.empty()) throw std::invalid_argument("eval_mse: empty dataset");
    const EncoderNet net(model.config);
    const QuantHead head(model.config.embed_dim);
    return val_mse(net, head, model.encoder_params, model.head_params, data);
}

JointLossParts joint_loss_parts(const EncoderConfig& config,
                                std::span<const double> encoder_params,
                                std::span<const double> head_params,
                                std::span<const ContrastiveGroup> batch, double tau) {
    const EncoderNet net(config);
    const QuantHead head(config.embed_dim);
    ContrastiveBatch cb;
    cb.tau = tau;
    cb.negatives.resize(batch.size());
    std::vector<NoiseStrengths> preds, truths;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const GroupView v = view_of(batch[k]);
        for (std::size_t m = 0; m < v.images.size(); ++m) {
            std::vector<double> z = net.forward(*v.images[m], encoder_params);
            preds.push_back(head.forward(z, head_params));
            truths.push_back(*v.labels[m]);
            if (m == 0)
                cb.anchors.push_back(std::move(z));
            else if (m == 1)
                cb.positives.push_back(std::move(z));
            else
                cb.negatives[k].push_back(std::move(z));
        }
    }
    JointLossParts parts;
    parts.contrastive = info_nce_loss(cb);
    parts.mse = mse_head_loss(preds, truths);
    parts.total = parts.contrastive + parts.mse;
    return parts;
}

} // namespace noiselab
