#include "noiselab/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noiselab/errors.hpp"

namespace noiselab {

namespace {

enum class Act { Tanh, Relu, Abs };

Act act_from_name(const std::string& name) {
    if (name == "tanh") return Act::Tanh;
    if (name == "relu") return Act::Relu;
    return Act::Abs;
}

double activate(double v, Act act) {
    switch (act) {
        case Act::Tanh: return std::tanh(v);
        case Act::Relu: return std::max(0.0, v);
        case Act::Abs: return std::abs(v);
    }
    return v;
}

// Slopes are recoverable from the stored post-activation except for the abs
// branch, which needs the pre-activation sign.
double activate_grad(double pre, double post, Act act) {
    switch (act) {
        case Act::Tanh: return 1.0 - post * post;
        case Act::Relu: return post > 0.0 ? 1.0 : 0.0;
        case Act::Abs: return pre >= 0.0 ? 1.0 : -1.0;
    }
    return 1.0;
}

} // namespace

void EncoderConfig::validate() const {
    if (embed_dim < 8) throw std::invalid_argument("EncoderConfig: embed_dim must be >= 8");
    if (input_size == 0 || in_channels == 0)
        throw std::invalid_argument("EncoderConfig: empty input shape");
    if (activation != "tanh" && activation != "relu" && activation != "abs")
        throw std::invalid_argument("EncoderConfig: unknown activation '" + activation + "'");
    std::size_t hw = input_size;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
        hw = (hw + 1) / 2;
        if (hw == 0) throw std::invalid_argument("EncoderConfig: too many conv stages");
        if (conv_channels[i] == 0)
            throw std::invalid_argument("EncoderConfig: zero conv channels");
    }
}

std::string_view train_stage_name(TrainStage s) {
    return s == TrainStage::Pretrained ? "pretrained" : "finetuned";
}

TrainStage train_stage_from_name(std::string_view name) {
    if (name == "pretrained") return TrainStage::Pretrained;
    if (name == "finetuned") return TrainStage::Finetuned;
    throw std::invalid_argument("unknown train stage: " + std::string(name));
}

// ---------------------------------------------------------------------------
// EncoderNet
// ---------------------------------------------------------------------------

EncoderNet::EncoderNet(EncoderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::size_t offset = 0;
    std::size_t in_c = cfg_.in_channels;
    std::size_t hw = cfg_.input_size;
    for (std::size_t out_c : cfg_.conv_channels) {
        ConvShape s;
        s.in_c = in_c;
        s.out_c = out_c;
        s.in_hw = hw;
        s.out_hw = (hw + 1) / 2;
        s.w_offset = offset;
        offset += out_c * in_c * 9;
        s.b_offset = offset;
        offset += out_c;
        convs_.push_back(s);
        in_c = out_c;
        hw = s.out_hw;
    }
    std::size_t dim = in_c * hw * hw;
    std::vector<std::size_t> widths = cfg_.fc_dims;
    widths.push_back(cfg_.embed_dim);
    for (std::size_t i = 0; i < widths.size(); ++i) {
        FcShape s;
        s.in_dim = dim;
        s.out_dim = widths[i];
        s.w_offset = offset;
        offset += s.out_dim * s.in_dim;
        s.b_offset = offset;
        offset += s.out_dim;
        s.activated = i + 1 < widths.size(); // embedding layer stays linear
        fcs_.push_back(s);
        dim = s.out_dim;
    }
    param_count_ = offset;
}

std::vector<double> EncoderNet::init_params() const {
    std::vector<double> p(param_count_, 0.0);
    const RngStream root = RngStream::root(cfg_.init_seed);
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        const ConvShape& s = convs_[i];
        auto sampler = root.child("conv", i).sampler();
        const double scale = std::sqrt(1.0 / static_cast<double>(s.in_c * 9));
        for (std::size_t w = 0; w < s.out_c * s.in_c * 9; ++w)
            p[s.w_offset + w] = sampler.normal(0.0, scale);
    }
    for (std::size_t i = 0; i < fcs_.size(); ++i) {
        const FcShape& s = fcs_[i];
        auto sampler = root.child("fc", i).sampler();
        const double scale = std::sqrt(1.0 / static_cast<double>(s.in_dim));
        for (std::size_t w = 0; w < s.out_dim * s.in_dim; ++w)
            p[s.w_offset + w] = sampler.normal(0.0, scale);
    }
    return p;
}

std::vector<double> EncoderNet::forward(const ImageTensor& x, std::span<const double> params,
                                        Trace* trace) const {
    if (x.channels != cfg_.in_channels || x.height != cfg_.input_size ||
        x.width != cfg_.input_size)
        throw std::invalid_argument("EncoderNet::forward: input shape mismatch");
    if (params.size() != param_count_)
        throw std::invalid_argument("EncoderNet::forward: parameter count mismatch");

    const Act act = act_from_name(cfg_.activation);
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pres; // pre-activations, one per layer
    acts.push_back(x.data);

    // Conv stages: 3x3, stride 2, zero pad 1, activation.
    for (const ConvShape& s : convs_) {
        const std::vector<double>& in = acts.back();
        std::vector<double> pre(s.out_c * s.out_hw * s.out_hw, 0.0);
        std::vector<double> out(pre.size(), 0.0);
        const long long in_hw = static_cast<long long>(s.in_hw);
        for (std::size_t oc = 0; oc < s.out_c; ++oc) {
            const double bias = params[s.b_offset + oc];
            for (std::size_t oy = 0; oy < s.out_hw; ++oy) {
                for (std::size_t ox = 0; ox < s.out_hw; ++ox) {
                    double acc = bias;
                    const long long iy0 = 2 * static_cast<long long>(oy) - 1;
                    const long long ix0 = 2 * static_cast<long long>(ox) - 1;
                    for (std::size_t ic = 0; ic < s.in_c; ++ic) {
                        const double* wbase =
                            params.data() + s.w_offset + (oc * s.in_c + ic) * 9;
                        const double* ibase = in.data() + ic * s.in_hw * s.in_hw;
                        for (int ky = 0; ky < 3; ++ky) {
                            const long long iy = iy0 + ky;
                            if (iy < 0 || iy >= in_hw) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const long long ix = ix0 + kx;
                                if (ix < 0 || ix >= in_hw) continue;
                                acc += wbase[ky * 3 + kx] * ibase[iy * in_hw + ix];
                            }
                        }
                    }
                    const std::size_t oi = (oc * s.out_hw + oy) * s.out_hw + ox;
                    pre[oi] = acc;
                    out[oi] = activate(acc, act);
                }
            }
        }
        if (trace) pres.push_back(std::move(pre));
        acts.push_back(std::move(out));
    }

    // Fully connected stack.
    for (const FcShape& s : fcs_) {
        const std::vector<double>& in = acts.back();
        std::vector<double> pre(s.out_dim, 0.0);
        std::vector<double> out(s.out_dim, 0.0);
        for (std::size_t o = 0; o < s.out_dim; ++o) {
            double acc = params[s.b_offset + o];
            const double* wrow = params.data() + s.w_offset + o * s.in_dim;
            for (std::size_t i = 0; i < s.in_dim; ++i) acc += wrow[i] * in[i];
            pre[o] = acc;
            out[o] = s.activated ? activate(acc, act) : acc;
        }
        if (trace) pres.push_back(std::move(pre));
        acts.push_back(std::move(out));
    }

    std::vector<double> embedding = acts.back();
    double inv_norm = 1.0;
    if (cfg_.normalize_embeddings) {
        double norm2 = 0.0;
        for (double v : embedding) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        inv_norm = norm > 1e-12 ? 1.0 / norm : 0.0;
        for (double& v : embedding) v *= inv_norm;
    }

    if (trace) {
        trace->pre_norm = acts.back();
        trace->inv_norm = inv_norm;
        trace->acts = std::move(acts);
        trace->pres = std::move(pres);
    }
    return embedding;
}

void EncoderNet::backward(const Trace& trace, std::span<const double> params,
                          std::span<const double> d_embedding,
                          std::span<double> d_params) const {
    const Act act = act_from_name(cfg_.activation);

    // Through the normalization: d_pre = (g - z (z . g)) / |y|.
    std::vector<double> grad(d_embedding.begin(), d_embedding.end());
    if (cfg_.normalize_embeddings) {
        const std::vector<double>& y = trace.pre_norm;
        const double inv_norm = trace.inv_norm;
        double zg = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) zg += y[i] * inv_norm * grad[i];
        for (std::size_t i = 0; i < y.size(); ++i)
            grad[i] = inv_norm * (grad[i] - y[i] * inv_norm * zg);
    }

    // FC stack, reverse order. acts index: conv outputs occupy
    // [1, convs], fc outputs follow.
    for (std::size_t li = fcs_.size(); li-- > 0;) {
        const FcShape& s = fcs_[li];
        const std::vector<double>& in = trace.acts[convs_.size() + li];
        const std::vector<double>& out = trace.acts[convs_.size() + li + 1];
        std::vector<double> d_in(s.in_dim, 0.0);
        for (std::size_t o = 0; o < s.out_dim; ++o) {
            double g = grad[o];
            if (s.activated)
                g *= activate_grad(trace.pres[convs_.size() + li][o], out[o], act);
            if (g == 0.0) continue;
            d_params[s.b_offset + o] += g;
            const double* wrow = params.data() + s.w_offset + o * s.in_dim;
            double* dwrow = d_params.data() + s.w_offset + o * s.in_dim;
            for (std::size_t i = 0; i < s.in_dim; ++i) {
                dwrow[i] += g * in[i];
                d_in[i] += g * wrow[i];
            }
        }
        grad = std::move(d_in);
    }

    // Conv stages, reverse order.
    for (std::size_t li = convs_.size(); li-- > 0;) {
        const ConvShape& s = convs_[li];
        const std::vector<double>& in = trace.acts[li];
        const std::vector<double>& out = trace.acts[li + 1];
        std::vector<double> d_in(in.size(), 0.0);
        const long long in_hw = static_cast<long long>(s.in_hw);
        for (std::size_t oc = 0; oc < s.out_c; ++oc) {
            for (std::size_t oy = 0; oy < s.out_hw; ++oy) {
                for (std::size_t ox = 0; ox < s.out_hw; ++ox) {
                    const std::size_t oi = (oc * s.out_hw + oy) * s.out_hw + ox;
                    double g = grad[oi] * activate_grad(trace.pres[li][oi], out[oi], act);
                    if (g == 0.0) continue;
                    d_params[s.b_offset + oc] += g;
                    const long long iy0 = 2 * static_cast<long long>(oy) - 1;
                    const long long ix0 = 2 * static_cast<long long>(ox) - 1;
                    for (std::size_t ic = 0; ic < s.in_c; ++ic) {
                        const double* wbase =
                            params.data() + s.w_offset + (oc * s.in_c + ic) * 9;
                        double* dwbase =
                            d_params.data() + s.w_offset + (oc * s.in_c + ic) * 9;
                        const double* ibase = in.data() + ic * s.in_hw * s.in_hw;
                        double* dibase = d_in.data() + ic * s.in_hw * s.in_hw;
                        for (int ky = 0; ky < 3; ++ky) {
                            const long long iy = iy0 + ky;
                            if (iy < 0 || iy >= in_hw) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const long long ix = ix0 + kx;
                                if (ix < 0 || ix >= in_hw) continue;
                                dwbase[ky * 3 + kx] += g * ibase[iy * in_hw + ix];
                                dibase[iy * in_hw + ix] += g * wbase[ky * 3 + kx];
                            }
                        }
                    }
                }
            }
        }
        grad = std::move(d_in);
    }
}

// ---------------------------------------------------------------------------
// QuantHead
// ---------------------------------------------------------------------------

QuantHead::QuantHead(std::size_t embed_dim) : embed_dim_(embed_dim) {
    if (embed_dim_ == 0) throw std::invalid_argument("QuantHead: zero embedding dim");
}

std::vector<double> QuantHead::init_params(const RngStream& rng) const {
    std::vector<double> p(param_count(), 0.0);
    auto sampler = rng.sampler();
    const double scale = std::sqrt(1.0 / static_cast<double>(embed_dim_));
    for (std::size_t i = 0; i < kStrengthCount * embed_dim_; ++i)
        p[i] = sampler.normal(0.0, scale);
    return p; // biases start at zero
}

NoiseStrengths QuantHead::forward(std::span<const double> embedding,
                                  std::span<const double> params, Trace* trace) const {
    if (embedding.size() != embed_dim_)
        throw std::invalid_argument("QuantHead::forward: embedding size mismatch");
    if (params.size() != param_count())
        throw std::invalid_argument("QuantHead::forward: parameter count mismatch");
    NoiseStrengths out;
    for (std::size_t o = 0; o < kStrengthCount; ++o) {
        double acc = params[kStrengthCount * embed_dim_ + o];
        const double* wrow = params.data() + o * embed_dim_;
        for (std::size_t i = 0; i < embed_dim_; ++i) acc += wrow[i] * embedding[i];
        out[o] = 1.0 / (1.0 + std::exp(-acc)); // logistic link keeps [0, 1]
    }
    if (trace) {
        trace->input.assign(embedding.begin(), embedding.end());
        for (std::size_t o = 0; o < kStrengthCount; ++o) trace->output[o] = out[o];
    }
    return out;
}

void QuantHead::backward(const Trace& trace, std::span<const double> params,
                         std::span<const double> d_output, std::span<double> d_params,
                         std::span<double> d_embedding) const {
    for (std::size_t o = 0; o < kStrengthCount; ++o) {
        const double y = trace.output[o];
        const double g = d_output[o] * y * (1.0 - y); // logistic slope
        if (g == 0.0) continue;
        d_params[kStrengthCount * embed_dim_ + o] += g;
        const double* wrow = params.data() + o * embed_dim_;
        double* dwrow = d_params.data() + o * embed_dim_;
        for (std::size_t i = 0; i < embed_dim_; ++i) {
            dwrow[i] += g * trace.input[i];
            if (!d_embedding.empty()) d_embedding[i] += g * wrow[i];
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoint-level inference
// ---------------------------------------------------------------------------

std::vector<double> encode(const EncoderCheckpoint& model, const ImageTensor& x) {
    const EncoderNet net(model.config);
    return net.forward(x, model.encoder_params);
}

NoiseStrengths predict_strengths(const EncoderCheckpoint& model, const ImageTensor& x) {
    if (model.stage != TrainStage::Finetuned)
        throw std::invalid_argument("predict_strengths: checkpoint is not finetuned");
    const EncoderNet net(model.config);
    const QuantHead head(model.config.embed_dim);
    const std::vector<double> z = net.forward(x, model.encoder_params);
    return head.forward(z, model.head_params);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void check_contrastive(const ContrastiveBatch& b) {
    if (b.anchors.empty()) throw std::invalid_argument("info_nce_loss: empty batch");
    if (b.anchors.size() != b.positives.size() || b.anchors.size() != b.negatives.size())
        throw std::invalid_argument("info_nce_loss: role sizes differ");
    if (!(b.tau > 0.0)) throw std::invalid_argument("info_nce_loss: tau must be > 0");
}

} // namespace

double info_nce_loss(const ContrastiveBatch& batch) {
    check_contrastive(batch);
    const std::size_t n = batch.anchors.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s_pos = dot(batch.anchors[i], batch.positives[i]) / batch.tau;
        double m = s_pos;
        std::vector<double> s_neg;
        s_neg.reserve(batch.negatives[i].size());
        for (const auto& neg : batch.negatives[i]) {
            s_neg.push_back(dot(batch.anchors[i], neg) / batch.tau);
            m = std::max(m, s_neg.back());
        }
        double denom = std::exp(s_pos - m);
        for (double s : s_neg) denom += std::exp(s - m);
        total += -(s_pos - m) + std::log(denom);
    }
    return total / static_cast<double>(n);
}

double info_nce_loss_grad(const ContrastiveBatch& batch,
                          std::vector<std::vector<double>>& d_anchors,
                          std::vector<std::vector<double>>& d_positives,
                          std::vector<std::vector<std::vector<double>>>& d_negatives) {
    check_contrastive(batch);
    const std::size_t n = batch.anchors.size();
    const std::size_t dim = batch.anchors.front().size();
    const double inv_n = 1.0 / static_cast<double>(n);

    d_anchors.assign(n, std::vector<double>(dim, 0.0));
    d_positives.assign(n, std::vector<double>(dim, 0.0));
    d_negatives.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        d_negatives[i].assign(batch.negatives[i].size(), std::vector<double>(dim, 0.0));

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s_pos = dot(batch.anchors[i], batch.positives[i]) / batch.tau;
        double m = s_pos;
        std::vector<double> s_neg(batch.negatives[i].size());
        for (std::size_t t = 0; t < s_neg.size(); ++t) {
            s_neg[t] = dot(batch.anchors[i], batch.negatives[i][t]) / batch.tau;
            m = std::max(m, s_neg[t]);
        }
        const double e_pos = std::exp(s_pos - m);
        double denom = e_pos;
        std::vector<double> e_neg(s_neg.size());
        for (std::size_t t = 0; t < s_neg.size(); ++t) {
            e_neg[t] = std::exp(s_neg[t] - m);
            denom += e_neg[t];
        }
        total += -(s_pos - m) + std::log(denom);

        // d/ds_pos = p_pos - 1; d/ds_neg_t = p_t (softmax weights).
        const double gscale = inv_n / batch.tau;
        const double g_pos = (e_pos / denom - 1.0) * gscale;
        for (std::size_t dd = 0; dd < dim; ++dd) {
            d_anchors[i][dd] += g_pos * batch.positives[i][dd];
            d_positives[i][dd] += g_pos * batch.anchors[i][dd];
        }
        for (std::size_t t = 0; t < s_neg.size(); ++t) {
            const double g_neg = (e_neg[t] / denom) * gscale;
            for (std::size_t dd = 0; dd < dim; ++dd) {
                d_anchors[i][dd] += g_neg * batch.negatives[i][t][dd];
                d_negatives[i][t][dd] += g_neg * batch.anchors[i][dd];
            }
        }
    }
    return total * inv_n;
}

double mse_head_loss(std::span<const NoiseStrengths> pred,
                     std::span<const NoiseStrengths> truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("mse_head_loss: length mismatch");
    if (pred.empty()) throw std::invalid_argument("mse_head_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t c = 0; c < kStrengthCount; ++c) {
            const double d = pred[i][c] - truth[i][c];
            total += d * d;
        }
    return total / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

namespace {

struct LossEval {
    double loss = 0.0;
    std::vector<double> grad; // encoder params then head params
};

LossEval eval_with_grad(const EncoderNet& net, const QuantHead& head,
                        std::span<const double> enc_params,
                        std::span<const double> head_params, LossKind kind,
                        const GradCheckBatch& batch, bool want_grad) {
    LossEval ev;
    const std::size_t ne = enc_params.size();
    if (want_grad) ev.grad.assign(ne + head_params.size(), 0.0);

    if (kind == LossKind::Contrastive) {
        const std::size_t n = batch.anchors.size();
        ContrastiveBatch cb;
        cb.tau = batch.tau;
        cb.negatives.resize(n);
        std::vector<EncoderNet::Trace> ta(n), tp(n);
        std::vector<std::vector<EncoderNet::Trace>> tn(n);
        for (std::size_t i = 0; i < n; ++i) {
            cb.anchors.push_back(net.forward(batch.anchors[i], enc_params, &ta[i]));
            cb.positives.push_back(net.forward(batch.positives[i], enc_params, &tp[i]));
            tn[i].resize(batch.negatives[i].size());
            for (std::size_t t = 0; t < batch.negatives[i].size(); ++t)
                cb.negatives[i].push_back(
                    net.forward(batch.negatives[i][t], enc_params, &tn[i][t]));
        }
        if (!want_grad) {
            ev.loss = info_nce_loss(cb);
            return ev;
        }
        std::vector<std::vector<double>> da, dp;
        std::vector<std::vector<std::vector<double>>> dn;
        ev.loss = info_nce_loss_grad(cb, da, dp, dn);
        std::span<double> d_enc(ev.grad.data(), ne);
        for (std::size_t i = 0; i < n; ++i) {
            net.backward(ta[i], enc_params, da[i], d_enc);
            net.backward(tp[i], enc_params, dp[i], d_enc);
            for (std::size_t t = 0; t < tn[i].size(); ++t)
                net.backward(tn[i][t], enc_params, dn[i][t], d_enc);
        }
        return ev;
    }

    const std::size_t n = batch.inputs.size();
    std::vector<EncoderNet::Trace> traces(n);
    std::vector<QuantHead::Trace> head_traces(n);
    std::vector<NoiseStrengths> preds(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> z = net.forward(batch.inputs[i], enc_params, &traces[i]);
        preds[i] = head.forward(z, head_params, &head_traces[i]);
    }
    ev.loss = mse_head_loss(preds, batch.targets);
    if (!want_grad) return ev;

    std::span<double> d_enc(ev.grad.data(), ne);
    std::span<double> d_head(ev.grad.data() + ne, head_params.size());
    const double scale = 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, kStrengthCount> d_out{};
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            d_out[c] = scale * (preds[i][c] - batch.targets[i][c]);
        std::vector<double> d_embed(net.config().embed_dim, 0.0);
        head.backward(head_traces[i], head_params, d_out, d_head, d_embed);
        net.backward(traces[i], enc_params, d_embed, d_enc);
    }
    return ev;
}

} // namespace

double grad_check(const EncoderConfig& cfg, std::span<const double> encoder_params,
                  std::span<const double> head_params, LossKind kind,
                  const GradCheckBatch& batch, double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
        throw std::invalid_argument("grad_check: epsilon must lie in [1e-7, 1e-3]");
    const EncoderNet net(cfg);
    const QuantHead head(cfg.embed_dim);

    LossEval analytic =
        eval_with_grad(net, head, encoder_params, head_params, kind, batch, true);
    if (!std::isfinite(analytic.loss)) throw NumericFailure("grad_check: non-finite loss");

    std::vector<double> params(encoder_params.begin(), encoder_params.end());
    params.insert(params.end(), head_params.begin(), head_params.end());
    const std::size_t ne = encoder_params.size();

    double max_err = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double up = eval_with_grad(net, head, std::span(params.data(), ne),
                                         std::span(params.data() + ne, head_params.size()),
                                         kind, batch, false)
                              .loss;
        params[i] = saved - epsilon;
        const double down = eval_with_grad(net, head, std::span(params.data(), ne),
                                           std::span(params.data() + ne, head_params.size()),
                                           kind, batch, false)
                                .loss;
        params[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericFailure("grad_check: non-finite loss under perturbation");
        const double fd = (up - down) / (2.0 * epsilon);
        const double ga = analytic.grad[i];
        const double err = std::abs(ga - fd) / std::max({1.0, std::abs(ga), std::abs(fd)});
        max_err = std::max(max_err, err);
    }
    return max_err;
}

} // namespace noiselab
