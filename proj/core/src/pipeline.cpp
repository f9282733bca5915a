#include "noiselab/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "noiselab/analysis.hpp"
#include "noiselab/checkpoint_io.hpp"
#include "noiselab/digest.hpp"
#include "noiselab/errors.hpp"
#include "noiselab/shapley.hpp"
#include "noiselab/stats.hpp"
#include "noiselab/tensor_io.hpp"
#include "noiselab/textures.hpp"

namespace noiselab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void run_indexed(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t count = std::min(workers, n);
    pool.reserve(count);
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    f(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    failed.store(true);
                    if (error.empty()) error = e.what();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (failed.load()) throw std::runtime_error(error);
}

std::string zero_pad(std::size_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
    return buf;
}

PoissonMode parse_poisson_mode(const std::string& s) {
    if (s == "additive") return PoissonMode::Additive;
    if (s == "centered") return PoissonMode::Centered;
    throw std::invalid_argument("unknown poisson mode '" + s + "'");
}

QuantMode parse_quant_mode(const std::string& s) {
    if (s == "dithered") return QuantMode::Dithered;
    if (s == "additive_uniform") return QuantMode::AdditiveUniform;
    throw std::invalid_argument("unknown quantization mode '" + s + "'");
}

const std::array<std::string, kStrengthCount>& component_names() {
    static const std::array<std::string, kStrengthCount> names = [] {
        std::array<std::string, kStrengthCount> n;
        for (std::size_t i = 0; i < kStrengthCount; ++i)
            n[i] = std::string(primitive_name(static_cast<Primitive>(i)));
        return n;
    }();
    return names;
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    // Shortest representation that parses back to the same double, so CSV
    // and JSON round trips are value-exact.
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

ImageTensor to_channels(const ImageTensor& x, std::size_t channels) {
    if (x.channels == channels) return x;
    if (x.channels == 3 && channels == 1) {
        ImageTensor out(1, x.height, x.width);
        for (std::size_t y = 0; y < x.height; ++y)
            for (std::size_t xx = 0; xx < x.width; ++xx)
                out.at(0, y, xx) =
                    (x.at(0, y, xx) + x.at(1, y, xx) + x.at(2, y, xx)) / 3.0;
        return out;
    }
    if (x.channels == 1 && channels == 3) {
        ImageTensor out(3, x.height, x.width);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < x.height; ++y)
                for (std::size_t xx = 0; xx < x.width; ++xx) out.at(c, y, xx) = x.at(0, y, xx);
        return out;
    }
    throw std::invalid_argument("to_channels: cannot adapt " + std::to_string(x.channels) +
                                " channels to " + std::to_string(channels));
}

void write_resolved_config(const std::string& dir, const std::string& command,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
    json j;
    j["command"] = command;
    for (const auto& [k, v] : kv) j[k] = v;
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / "config.resolved.json", std::ios::trunc);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

Manifest cmd_synthesize(const SynthesizeOptions& opts) {
    if (opts.out_dir.empty()) throw std::invalid_argument("synthesize: out_dir required");
    fs::create_directories(opts.out_dir);
    const RngStream root = RngStream::root(opts.seed);
    const PoissonMode pmode = parse_poisson_mode(opts.poisson_mode);
    const QuantMode qmode = parse_quant_mode(opts.quant_mode);

    // Clean pool: either ingest a source directory or generate textures.
    std::vector<ImageTensor> cleans;
    std::vector<std::string> clean_ids;
    std::vector<std::string> clean_paths;
    std::vector<std::string> failures;
    if (!opts.source_dir.empty()) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(opts.source_dir))
            if (entry.is_regular_file()) files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) {
            try {
                cleans.push_back(load_image_any(f));
            } catch (const std::exception& e) {
                failures.push_back(f + ": " + e.what());
                continue;
            }
            clean_ids.push_back("clean_" + zero_pad(cleans.size() - 1, 4));
            clean_paths.push_back(fs::path(f).filename().string());
        }
        for (const std::string& f : failures) std::cerr << "synthesize: skipped " << f << "\n";
        if (cleans.empty() && !files.empty())
            throw std::runtime_error("synthesize: every source file failed to load");
    } else {
        const std::size_t pool = std::max<std::size_t>(1, opts.clean_pool);
        for (std::size_t i = 0; i < pool; ++i) {
            cleans.push_back(procedural_texture(opts.texture_family, opts.channels,
                                                opts.image_size, root.child("clean", i),
                                                opts.texture_lo, opts.texture_hi));
            clean_ids.push_back("clean_" + zero_pad(i, 4));
            clean_paths.push_back(clean_ids.back() + ".nsmt");
        }
    }

    Manifest manifest;
    for (std::size_t i = 0; i < cleans.size(); ++i) {
        if (opts.source_dir.empty())
            write_tensor((fs::path(opts.out_dir) / clean_paths[i]).string(), cleans[i]);
        ManifestRecord rec;
        rec.id = clean_ids[i];
        rec.path = clean_paths[i];
        rec.role = "clean";
        manifest.records.push_back(std::move(rec));
    }

    // Corrupted samples; index-sharded so worker count cannot reorder output.
    std::vector<NoiseSample> samples(opts.count);
    run_indexed(opts.count, opts.workers, [&](std::size_t i) {
        const RngStream s = root.child("sample", i);
        const std::size_t clean_index = i % cleans.size();
        const NoiseStrengths eta = sample_strengths(s.child("gene", 0));
        ComposeOptions copts;
        copts.poisson_mode = pmode;
        copts.quant_mode = qmode;
        samples[i] = compose(cleans[clean_index], eta, opts.order, s.child("field", 0),
                             clean_ids[clean_index], copts);
        write_tensor((fs::path(opts.out_dir) / ("img_" + zero_pad(i, 5) + ".nsmt")).string(),
                     samples[i].corrupted);
    });

    for (std::size_t i = 0; i < opts.count; ++i) {
        ManifestRecord rec;
        rec.id = "img_" + zero_pad(i, 5);
        rec.path = rec.id + ".nsmt";
        rec.role = "corrupted";
        rec.clean_id = samples[i].clean_id;
        rec.strengths = samples[i].strengths;
        rec.seed = samples[i].seed_path;
        rec.order = samples[i].order;
        manifest.records.push_back(std::move(rec));
    }

    save_manifest((fs::path(opts.out_dir) / "manifest.jsonl").string(), manifest);
    write_resolved_config(
        opts.out_dir, "synthesize",
        {{"seed", std::to_string(opts.seed)},
         {"count", std::to_string(opts.count)},
         {"image_size", std::to_string(opts.image_size)},
         {"channels", std::to_string(opts.channels)},
         {"clean_pool", std::to_string(opts.clean_pool)},
         {"source_dir", opts.source_dir},
         {"texture_family", opts.texture_family},
         {"texture_lo", format_double(opts.texture_lo)},
         {"texture_hi", format_double(opts.texture_hi)},
         {"poisson_mode", opts.poisson_mode},
         {"quant_mode", opts.quant_mode},
         {"workers", std::to_string(opts.workers)},
         {"out", opts.out_dir}});
    return manifest;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

struct LoadedDataset {
    std::vector<ImageTensor> cleans;             // role == clean
    std::vector<std::string> clean_ids;
    std::vector<LabeledImage> labeled;           // corrupted with strengths
    std::vector<const ManifestRecord*> labeled_records;
};

LoadedDataset load_dataset(const Manifest& manifest, const std::string& manifest_path) {
    const fs::path base = fs::path(manifest_path).parent_path();
    LoadedDataset ds;
    for (const ManifestRecord& rec : manifest.records) {
        if (rec.role == "clean") {
            ds.cleans.push_back(load_image_any((base / rec.path).string()));
            ds.clean_ids.push_back(rec.id);
        } else if (rec.role == "corrupted" && rec.strengths) {
            LabeledImage li;
            li.image = load_image_any((base / rec.path).string());
            li.strengths = *rec.strengths;
            ds.labeled.push_back(std::move(li));
            ds.labeled_records.push_back(&rec);
        }
    }
    return ds;
}

void write_log_csv(const std::string& path, const std::vector<TrainLogRow>& log) {
    if (path.empty()) return;
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << "epoch,split,loss\n";
    for (const TrainLogRow& row : log)
        out << row.epoch << "," << row.split << "," << format_double(row.loss) << "\n";
}

// Fixed cross-pairing over the labeled records: group i borrows group
// (i+1)'s clean source for its positive and contrasts the next few recorded
// genes. Keeps the labeled-gene budget at the dataset size while providing
// contrastive structure for the joint arm.
std::vector<ContrastiveGroup> groups_from_manifest(const LoadedDataset& ds,
                                                   std::size_t contrast_count = 5) {
    std::vector<ContrastiveGroup> out;
    const std::size_t m = ds.labeled.size();
    if (m < 2) return out;
    auto clean_of = [&](const ManifestRecord* rec) -> const ImageTensor& {
        for (std::size_t c = 0; c < ds.clean_ids.size(); ++c)
            if (ds.clean_ids[c] == rec->clean_id.value_or("")) return ds.cleans[c];
        throw std::invalid_argument("train: corrupted record '" + rec->id +
                                    "' has no loadable clean source");
    };
    auto gene_of = [](const ManifestRecord* rec) {
        NoiseGene g;
        g.eta = *rec->strengths;
        g.field = *rec->seed;
        return g;
    };
    for (std::size_t i = 0; i < m; ++i) {
        const ManifestRecord* a = ds.labeled_records[i];
        const ManifestRecord* b = ds.labeled_records[(i + 1) % m];
        if (!a->seed || !a->strengths) continue;
        std::vector<NoiseGene> contrast;
        for (std::size_t k = 1; k <= std::min(contrast_count, m - 1); ++k) {
            const ManifestRecord* c = ds.labeled_records[(i + k) % m];
            if (c->seed && c->strengths) contrast.push_back(gene_of(c));
        }
        if (contrast.empty()) continue;
        out.push_back(make_contrastive_group(clean_of(a), clean_of(b), gene_of(a), contrast,
                                             true, i, a->order.value_or(default_order())));
    }
    return out;
}

} // namespace

EncoderCheckpoint cmd_train(const TrainOptions& opts) {
    const Manifest manifest = load_manifest(opts.manifest_path);
    const LoadedDataset ds = load_dataset(manifest, opts.manifest_path);
    const RngStream rng = RngStream::root(opts.seed);
    std::vector<TrainLogRow> log;

    EncoderCheckpoint ckpt;
    if (opts.mode == "pretrain") {
        if (ds.cleans.empty())
            throw std::invalid_argument("train: pretrain mode needs clean records");
        PretrainSchedule sched;
        sched.epochs = opts.epochs;
        sched.steps_per_epoch = opts.steps_per_epoch;
        sched.batch = opts.batch;
        sched.lr = opts.lr;
        sched.tau = opts.tau;
        ckpt = pretrain(opts.encoder, ds.cleans, sched, rng, &log);
    } else if (opts.mode == "finetune" || opts.mode == "scratch") {
        if (ds.labeled.empty())
            throw std::invalid_argument("train: mode '" + opts.mode +
                                        "' needs corrupted records with strengths");
        const std::size_t n = ds.labeled.size();
        const std::size_t n_val =
            std::min(n - 1, static_cast<std::size_t>(std::floor(
                                opts.val_fraction * static_cast<double>(n))));
        std::span<const LabeledImage> train_split(ds.labeled.data(), n - n_val);
        std::span<const LabeledImage> val_split(ds.labeled.data() + (n - n_val), n_val);
        HeadSchedule sched;
        sched.epochs = opts.epochs;
        sched.batch = opts.batch;
        sched.lr = opts.lr;
        if (opts.mode == "finetune") {
            if (opts.init_checkpoint.empty())
                throw std::invalid_argument("train: finetune needs an init checkpoint");
            const EncoderCheckpoint init = load_checkpoint(opts.init_checkpoint);
            ckpt = finetune(init, train_split, sched, rng, &log, val_split);
        } else {
            ckpt = train_scratch(opts.encoder, train_split, sched, rng, &log, val_split);
        }
    } else if (opts.mode == "joint") {
        const std::vector<ContrastiveGroup> groups = groups_from_manifest(ds);
        if (groups.empty())
            throw std::invalid_argument(
                "train: joint mode needs >= 2 corrupted records with strengths and seeds");
        const std::size_t n = ds.labeled.size();
        const std::size_t n_val =
            std::min(n - 1, static_cast<std::size_t>(std::floor(
                                opts.val_fraction * static_cast<double>(n))));
        std::span<const LabeledImage> val_split(ds.labeled.data() + (n - n_val), n_val);
        JointSchedule sched;
        sched.epochs = opts.epochs;
        sched.batch = opts.batch;
        sched.lr = opts.lr;
        sched.tau = opts.tau;
        std::span<const ContrastiveGroup> train_groups(
            groups.data(), groups.size() - std::min(groups.size() - 1, n_val));
        ckpt = train_joint(opts.encoder, train_groups, sched, rng, &log, val_split);
    } else {
        throw std::invalid_argument("train: unknown mode '" + opts.mode + "'");
    }

    if (!opts.out_checkpoint.empty()) {
        const fs::path parent = fs::path(opts.out_checkpoint).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        save_checkpoint(opts.out_checkpoint, ckpt);
        write_resolved_config(
            parent.empty() ? "." : parent.string(), "train",
            {{"manifest", opts.manifest_path},
             {"mode", opts.mode},
             {"seed", std::to_string(opts.seed)},
             {"epochs", std::to_string(opts.epochs)},
             {"steps_per_epoch", std::to_string(opts.steps_per_epoch)},
             {"batch", std::to_string(opts.batch)},
             {"lr", format_double(opts.lr)},
             {"tau", format_double(opts.tau)},
             {"val_fraction", format_double(opts.val_fraction)},
             {"init_checkpoint", opts.init_checkpoint},
             {"out", opts.out_checkpoint}});
    }
    write_log_csv(opts.log_csv, log);
    return ckpt;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

PredictionFile cmd_estimate(const EstimateOptions& opts) {
    if (opts.checkpoint_path.empty())
        throw std::invalid_argument("estimate: checkpoint required");
    const EncoderCheckpoint ckpt = load_checkpoint(opts.checkpoint_path);
    const Manifest manifest = load_manifest(opts.manifest_path);
    const fs::path base = fs::path(opts.manifest_path).parent_path();

    const std::size_t window =
        opts.window_size == 0 ? ckpt.config.input_size : opts.window_size;
    if (window != ckpt.config.input_size)
        throw std::invalid_argument("estimate: window size must match the model input (" +
                                    std::to_string(ckpt.config.input_size) + ")");
    if (opts.windows == 0) throw std::invalid_argument("estimate: windows must be >= 1");

    std::vector<const ManifestRecord*> targets;
    for (const ManifestRecord& rec : manifest.records) {
        if (opts.role_filter == "all" ? rec.role != "clean" : rec.role == opts.role_filter)
            targets.push_back(&rec);
    }

    PredictionFile out;
    out.rows.resize(targets.size());
    out.checkpoint_digest = to_hex(checkpoint_digest(ckpt));
    out.manifest_digest = to_hex(digest_file(opts.manifest_path));
    out.seed = opts.seed;

    const RngStream root = RngStream::root(opts.seed);
    run_indexed(targets.size(), opts.workers, [&](std::size_t i) {
        const ManifestRecord& rec = *targets[i];
        ImageTensor img = to_channels(load_image_any((base / rec.path).string()),
                                      ckpt.config.in_channels);
        std::size_t n_windows = opts.windows;
        if (img.height < window || img.width < window) {
            std::cerr << "estimate: image '" << rec.id
                      << "' is smaller than the window; using one full-image window\n";
            n_windows = 1;
        }

        auto sampler = root.child("windows", i).sampler();
        std::vector<std::array<double, kStrengthCount>> preds;
        preds.reserve(n_windows);
        for (std::size_t w = 0; w < n_windows; ++w) {
            ImageTensor crop;
            if (img.height < window || img.width < window) {
                crop = img;
            } else {
                const std::size_t top = sampler.uniform_below(img.height - window + 1);
                const std::size_t left = sampler.uniform_below(img.width - window + 1);
                crop = ImageTensor(img.channels, window, window);
                for (std::size_t c = 0; c < img.channels; ++c)
                    for (std::size_t y = 0; y < window; ++y)
                        for (std::size_t x = 0; x < window; ++x)
                            crop.at(c, y, x) = img.at(c, top + y, left + x);
            }
            const NoiseStrengths p = predict_strengths(ckpt, crop);
            preds.push_back(p.eta);
        }

        PredictionRow row;
        row.id = rec.id;
        row.windows = n_windows;
        for (std::size_t c = 0; c < kStrengthCount; ++c) {
            std::vector<double> vals(preds.size());
            for (std::size_t w = 0; w < preds.size(); ++w) vals[w] = preds[w][c];
            row.mean[c] = mean_of(vals);
            row.stddev[c] = vals.size() > 1 ? stddev_of(vals) : 0.0;
        }
        out.rows[i] = std::move(row);
    });

    if (!opts.out_csv.empty()) {
        const fs::path parent = fs::path(opts.out_csv).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        std::ofstream csv(opts.out_csv, std::ios::trunc);
        csv << "id,windows";
        for (const std::string& c : component_names()) csv << ",mean_" << c;
        for (const std::string& c : component_names()) csv << ",std_" << c;
        csv << ",checkpoint_digest,manifest_digest,seed\n";
        for (const PredictionRow& row : out.rows) {
            csv << row.id << "," << row.windows;
            for (std::size_t c = 0; c < kStrengthCount; ++c)
                csv << "," << format_double(row.mean[c]);
            for (std::size_t c = 0; c < kStrengthCount; ++c)
                csv << "," << format_double(row.stddev[c]);
            csv << "," << out.checkpoint_digest << "," << out.manifest_digest << ","
                << out.seed << "\n";
        }
    }
    return out;
}

PredictionFile read_predictions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("predictions: empty file", 0);

    PredictionFile out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 2 + 2 * kStrengthCount + 3)
            throw FormatError("predictions: malformed row '" + line + "'", 0);
        PredictionRow row;
        row.id = fields[0];
        row.windows = std::stoull(fields[1]);
        for (std::size_t c = 0; c < kStrengthCount; ++c) {
            row.mean[c] = std::stod(fields[2 + c]);
            row.stddev[c] = std::stod(fields[2 + kStrengthCount + c]);
        }
        out.checkpoint_digest = fields[2 + 2 * kStrengthCount];
        out.manifest_digest = fields[3 + 2 * kStrengthCount];
        out.seed = std::stoull(fields[4 + 2 * kStrengthCount]);
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace {

struct MatchedData {
    std::vector<const PredictionRow*> preds;
    std::vector<const ManifestRecord*> records;
};

MatchedData match_predictions(const PredictionFile& pf, const Manifest& manifest) {
    MatchedData md;
    for (const PredictionRow& row : pf.rows) {
        const ManifestRecord* rec = manifest.find(row.id);
        if (!rec)
            throw std::invalid_argument("analyze: prediction id '" + row.id +
                                        "' not present in manifest");
        md.preds.push_back(&row);
        md.records.push_back(rec);
    }
    return md;
}

void add_skip(AnalysisReport& rep, const std::string& analysis, const std::string& reason) {
    rep.records.push_back({"skipped", analysis + ": " + reason,
                           std::numeric_limits<double>::quiet_NaN(), std::nullopt,
                           std::nullopt, 0});
}

// Numeric metadata columns shared by every record (device strings become
// categorical codes in order of first appearance).
std::vector<NamedColumn> shared_metadata_columns(const MatchedData& md) {
    if (md.records.empty()) return {};
    std::vector<std::string> keys;
    for (const auto& [k, v] : md.records.front()->metadata) keys.push_back(k);
    std::vector<NamedColumn> cols;
    for (const std::string& key : keys) {
        bool everywhere = true;
        for (const ManifestRecord* rec : md.records)
            if (!rec->metadata.count(key)) {
                everywhere = false;
                break;
            }
        if (!everywhere) continue;
        NamedColumn col;
        col.name = key;
        std::vector<std::string> categories;
        bool ok = true;
        for (const ManifestRecord* rec : md.records) {
            const MetaValue& v = rec->metadata.at(key);
            if (std::holds_alternative<double>(v)) {
                col.values.push_back(std::get<double>(v));
            } else {
                const std::string& s = std::get<std::string>(v);
                auto it = std::find(categories.begin(), categories.end(), s);
                if (it == categories.end()) {
                    categories.push_back(s);
                    it = categories.end() - 1;
                }
                col.values.push_back(
                    static_cast<double>(std::distance(categories.begin(), it)));
            }
            if (!std::isfinite(col.values.back())) ok = false;
        }
        if (ok) cols.push_back(std::move(col));
    }
    return cols;
}

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 20; ++i) t.push_back(static_cast<double>(i) * 0.05);
    return t;
}

} // namespace

AnalysisReport cmd_analyze(const AnalyzeOptions& opts) {
    const PredictionFile pf = read_predictions_csv(opts.predictions_csv);
    const Manifest manifest = load_manifest(opts.manifest_path);
    const fs::path base = fs::path(opts.manifest_path).parent_path();
    const MatchedData md = match_predictions(pf, manifest);

    AnalysisReport rep;
    rep.checkpoint_digest = pf.checkpoint_digest;
    rep.manifest_digest = pf.manifest_digest;
    rep.seed = pf.seed;

    const std::size_t n = md.preds.size();
    const auto& names = component_names();

    // Truth strengths where the manifest provides them.
    std::vector<NoiseStrengths> truth, pred_vec;
    for (std::size_t i = 0; i < n; ++i) {
        if (md.records[i]->strengths) {
            truth.push_back(*md.records[i]->strengths);
            pred_vec.push_back(md.preds[i]->mean);
        }
    }

    for (const std::string& analysis : opts.analyses) {
        if (analysis == "metrics" || analysis == "residual") {
            if (truth.empty()) {
                add_skip(rep, analysis, "missing ground-truth strengths in manifest");
                continue;
            }
            for (std::size_t c = 0; c < kStrengthCount; ++c) {
                std::vector<double> p(truth.size()), t(truth.size());
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    p[i] = pred_vec[i][c];
                    t[i] = truth[i][c];
                }
                if (analysis == "metrics") {
                    try {
                        const RegressionMetrics m = regression_metrics(p, t);
                        rep.records.push_back(
                            {"rmse", names[c], m.rmse, std::nullopt, std::nullopt, truth.size()});
                        rep.records.push_back({"r_squared", names[c], m.r_squared, std::nullopt,
                                               std::nullopt, truth.size()});
                        rep.records.push_back({"pearson_r", names[c], m.pearson_r, std::nullopt,
                                               std::nullopt, truth.size()});
                    } catch (const UndefinedStatistic&) {
                        add_skip(rep, "metrics", names[c] + " truth has zero variance");
                    }
                } else {
                    const ResidualFit f = fit_residual_gaussian(p, t);
                    rep.records.push_back({"residual_mu", names[c], f.mu, std::nullopt,
                                           std::nullopt, truth.size()});
                    rep.records.push_back({"residual_sigma", names[c], f.sigma, std::nullopt,
                                           std::nullopt, truth.size()});
                }
            }
        } else if (analysis == "classification") {
            if (truth.empty()) {
                add_skip(rep, analysis, "missing ground-truth strengths in manifest");
                continue;
            }
            const std::vector<double> thresholds =
                opts.thresholds.empty() ? default_thresholds() : opts.thresholds;
            const ClassificationReport cr =
                classification_report(pred_vec, truth, thresholds);
            rep.records.push_back({"dominant_accuracy", "all", cr.dominant_accuracy,
                                   std::nullopt, std::nullopt, truth.size()});
            for (std::size_t t = 0; t < thresholds.size(); ++t) {
                char sub[32];
                std::snprintf(sub, sizeof(sub), "t=%.2f", thresholds[t]);
                rep.records.push_back({"threshold_accuracy", sub, cr.threshold_accuracy[t],
                                       std::nullopt, std::nullopt, truth.size()});
            }
            // The threshold-accuracy definition is an artifact choice; flag
            // it in the report so downstream readers know what was computed.
            rep.records.push_back({"threshold_accuracy_definition",
                                   "per_component_binary_agreement", 1.0, std::nullopt,
                                   std::nullopt, 0});
        } else if (analysis == "correlation") {
            std::vector<NamedColumn> cols = shared_metadata_columns(md);
            for (std::size_t c = 0; c < kStrengthCount; ++c) {
                NamedColumn col;
                col.name = "eta_" + names[c];
                for (std::size_t i = 0; i < n; ++i) col.values.push_back(md.preds[i]->mean[c]);
                cols.push_back(std::move(col));
            }
            if (n < 2 || cols.size() < 2) {
                add_skip(rep, analysis, "needs >= 2 rows and >= 2 columns");
                continue;
            }
            const CorrelationMatrix cm = correlation_matrix(cols);
            for (std::size_t i = 0; i < cm.names.size(); ++i)
                for (std::size_t j = i + 1; j < cm.names.size(); ++j)
                    rep.records.push_back({"pearson_r", cm.names[i] + "|" + cm.names[j],
                                           cm.at(i, j), std::nullopt, std::nullopt, n});
        } else if (analysis == "shap") {
            const std::vector<NamedColumn> features = shared_metadata_columns(md);
            if (features.empty() || n <= features.size() || features.size() > 12) {
                add_skip(rep, analysis, "missing metadata");
                continue;
            }
            std::vector<std::vector<double>> rows(n, std::vector<double>(features.size()));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < features.size(); ++j)
                    rows[i][j] = features[j].values[i];
            std::vector<std::vector<double>> background;
            const std::size_t stride = std::max<std::size_t>(1, n / 64);
            for (std::size_t i = 0; i < n; i += stride) background.push_back(rows[i]);

            for (std::size_t c = 0; c + 1 < kStrengthCount; ++c) { // five noise components
                std::vector<double> target(n);
                for (std::size_t i = 0; i < n; ++i) target[i] = md.preds[i]->mean[c];
                const Surrogate s = surrogate_fit(rows, target);
                rep.records.push_back({"surrogate_r2", names[c], s.r_squared, std::nullopt,
                                       std::nullopt, n});
                if (s.ridge_fallback)
                    rep.records.push_back({"surrogate_ridge_fallback", names[c], 1.0,
                                           std::nullopt, std::nullopt, n});
                const AttributionReport ar = shapley_report(s.fn, rows, background);
                for (std::size_t j = 0; j < features.size(); ++j) {
                    rep.records.push_back({"mean_abs_shap",
                                           features[j].name + "|" + names[c], ar.mean_abs[j],
                                           std::nullopt, std::nullopt, n});
                    rep.sankey.push_back({features[j].name, names[c], ar.mean_abs[j]});
                }
            }
        } else if (analysis == "depth") {
            bool have = n >= 6;
            for (std::size_t i = 0; i < n && have; ++i) {
                const auto& meta = md.records[i]->metadata;
                const auto it = meta.find("depth_um");
                if (it == meta.end() || !std::holds_alternative<double>(it->second) ||
                    !meta.count(opts.depth_arm_key))
                    have = false;
            }
            if (!have) {
                add_skip(rep, analysis, "missing metadata (depth_um/" + opts.depth_arm_key + ")");
                continue;
            }
            std::vector<double> depth(n);
            std::vector<int> arm(n);
            std::vector<std::string> arm_names = {"arm0", "arm1"};
            for (std::size_t i = 0; i < n; ++i) {
                depth[i] = std::get<double>(md.records[i]->metadata.at("depth_um"));
                const MetaValue& av = md.records[i]->metadata.at(opts.depth_arm_key);
                if (std::holds_alternative<double>(av)) {
                    arm[i] = std::get<double>(av) != 0.0 ? 1 : 0;
                } else {
                    const std::string& s = std::get<std::string>(av);
                    arm[i] = (s == "gained" || s == "1") ? 1 : 0;
                    arm_names = {"fixed", "gained"};
                }
            }
            for (std::size_t c = 0; c + 1 < kStrengthCount; ++c) {
                std::vector<double> value(n);
                for (std::size_t i = 0; i < n; ++i) value[i] = md.preds[i]->mean[c];
                try {
                    const DepthAnalysis da =
                        depth_analysis(depth, value, arm, arm_names[0], arm_names[1]);
                    for (const DepthArmFit* fit : {&da.arm_a, &da.arm_b}) {
                        const std::string sub = names[c] + "|" + fit->arm;
                        rep.records.push_back({"depth_slope", sub, fit->fit.slope,
                                               fit->fit.slope - fit->fit.slope_stderr,
                                               fit->fit.slope + fit->fit.slope_stderr,
                                               fit->fit.n});
                        rep.records.push_back({"depth_r_squared", sub, fit->fit.r_squared,
                                               std::nullopt, std::nullopt, fit->fit.n});
                    }
                    rep.records.push_back({"slope_diff_t", names[c], da.interaction_t,
                                           std::nullopt, std::nullopt, n});
                    rep.records.push_back({"slope_diff_p", names[c], da.interaction_p,
                                           std::nullopt, std::nullopt, n});
                    rep.records.push_back({"cohens_f2", names[c],
                                           da.intervention_effect.f_squared, std::nullopt,
                                           std::nullopt, n});
                    rep.records.push_back(
                        {"effect_class",
                         names[c] + ":" +
                             std::string(effect_class_name(da.intervention_effect.cls)),
                         static_cast<double>(da.intervention_effect.cls), std::nullopt,
                         std::nullopt, n});
                } catch (const std::exception& e) {
                    add_skip(rep, "depth", names[c] + ": " + e.what());
                }
            }
        } else if (analysis == "quality") {
            std::vector<double> psnrs, ssims, clean_pred;
            for (std::size_t i = 0; i < n; ++i) {
                if (!md.records[i]->clean_id) continue;
                const ManifestRecord* src = manifest.find(*md.records[i]->clean_id);
                if (!src) continue;
                try {
                    const ImageTensor img =
                        load_image_any((base / md.records[i]->path).string());
                    const ImageTensor ref = load_image_any((base / src->path).string());
                    const QualityMetrics q = reference_quality(img, ref);
                    if (!std::isfinite(q.psnr_db)) continue;
                    psnrs.push_back(q.psnr_db);
                    ssims.push_back(q.ssim);
                    clean_pred.push_back(
                        md.preds[i]->mean[static_cast<std::size_t>(Primitive::Clean)]);
                } catch (const std::exception&) {
                    continue;
                }
            }
            if (psnrs.size() < 3) {
                add_skip(rep, analysis, "needs >= 3 image pairs with clean references");
                continue;
            }
            rep.records.push_back({"mean_psnr_db", "all", mean_of(psnrs), std::nullopt,
                                   std::nullopt, psnrs.size()});
            rep.records.push_back({"mean_ssim", "all", mean_of(ssims), std::nullopt,
                                   std::nullopt, ssims.size()});
            try {
                rep.records.push_back({"pearson_r", "eta_clean|psnr",
                                       pearson(clean_pred, psnrs), std::nullopt, std::nullopt,
                                       psnrs.size()});
                rep.records.push_back({"pearson_r", "eta_clean|ssim",
                                       pearson(clean_pred, ssims), std::nullopt, std::nullopt,
                                       ssims.size()});
            } catch (const UndefinedStatistic&) {
                add_skip(rep, "quality", "zero-variance quality columns");
            }
        } else {
            add_skip(rep, analysis, "unknown analysis");
        }
    }

    if (!opts.out_prefix.empty()) write_report(rep, opts.out_prefix);
    return rep;
}

void write_report(const AnalysisReport& rep, const std::string& out_prefix) {
    const fs::path parent = fs::path(out_prefix).parent_path();
    if (!parent.empty()) fs::create_directories(parent);

    std::ofstream csv(out_prefix + ".csv", std::ios::trunc);
    csv << "metric,subset,value,ci_low,ci_high,n,checkpoint_digest,manifest_digest,seed\n";
    for (const MetricRecord& r : rep.records) {
        csv << r.metric << "," << r.subset << "," << format_double(r.value) << ","
            << (r.ci_low ? format_double(*r.ci_low) : "") << ","
            << (r.ci_high ? format_double(*r.ci_high) : "") << "," << r.n << ","
            << rep.checkpoint_digest << "," << rep.manifest_digest << "," << rep.seed << "\n";
    }
    csv.close();

    json j;
    j["provenance"] = {{"checkpoint_digest", rep.checkpoint_digest},
                       {"manifest_digest", rep.manifest_digest},
                       {"seed", rep.seed}};
    json records = json::array();
    for (const MetricRecord& r : rep.records) {
        json rec;
        rec["metric"] = r.metric;
        rec["subset"] = r.subset;
        if (std::isfinite(r.value))
            rec["value"] = r.value;
        else
            rec["value"] = format_double(r.value);
        if (r.ci_low) rec["ci_low"] = *r.ci_low;
        if (r.ci_high) rec["ci_high"] = *r.ci_high;
        rec["n"] = r.n;
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);
    json sankey = json::array();
    for (const SankeyFlow& f : rep.sankey)
        sankey.push_back({{"source_feature", f.source_feature},
                          {"target_noise", f.target_noise},
                          {"mean_abs_shap", f.mean_abs_shap}});
    j["sankey"] = std::move(sankey);
    std::ofstream js(out_prefix + ".json", std::ios::trunc);
    js << j.dump(2) << "\n";
    js.close();

    std::ofstream sk(out_prefix + "_sankey.csv", std::ios::trunc);
    sk << "source_feature,target_noise,mean_abs_shap,checkpoint_digest,manifest_digest,seed\n";
    for (const SankeyFlow& f : rep.sankey)
        sk << f.source_feature << "," << f.target_noise << ","
           << format_double(f.mean_abs_shap) << "," << rep.checkpoint_digest << ","
           << rep.manifest_digest << "," << rep.seed << "\n";
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

BenchReport cmd_bench(const BenchOptions& opts) {
    using clock = std::chrono::steady_clock;
    const RngStream root = RngStream::root(opts.seed);

    std::vector<ImageTensor> cleans;
    for (std::size_t i = 0; i < 8; ++i)
        cleans.push_back(
            procedural_texture("all", 1, opts.image_size, root.child("clean", i)));

    BenchReport rep;
    {
        std::vector<ImageTensor> out(opts.images);
        const auto t0 = clock::now();
        run_indexed(opts.images, opts.workers, [&](std::size_t i) {
            const RngStream s = root.child("sample", i);
            out[i] = compose(cleans[i % cleans.size()], sample_strengths(s.child("gene", 0)),
                             default_order(), s.child("field", 0))
                         .corrupted;
        });
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        rep.synth_images_per_sec = secs > 0 ? static_cast<double>(opts.images) / secs : 0.0;

        EncoderConfig cfg;
        cfg.input_size = opts.image_size;
        const EncoderNet net(cfg);
        const std::vector<double> params = net.init_params();
        const auto t1 = clock::now();
        std::vector<std::vector<double>> embeddings(out.size());
        run_indexed(out.size(), opts.workers,
                    [&](std::size_t i) { embeddings[i] = net.forward(out[i], params); });
        const double isecs = std::chrono::duration<double>(clock::now() - t1).count();
        rep.infer_images_per_sec = isecs > 0 ? static_cast<double>(out.size()) / isecs : 0.0;

        std::vector<LabeledImage> labeled(std::min<std::size_t>(64, out.size()));
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            labeled[i].image = out[i];
            labeled[i].strengths = sample_strengths(root.child("sample", i).child("gene", 0));
        }
        if (labeled.size() >= 2) {
            HeadSchedule sched;
            sched.epochs = 1;
            const auto t2 = clock::now();
            train_scratch(cfg, labeled, sched, root.child("bench_train", 0));
            rep.train_epoch_seconds =
                std::chrono::duration<double>(clock::now() - t2).count();
        }
    }
    return rep;
}

} // namespace noiselab::cli
