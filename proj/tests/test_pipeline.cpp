#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "noiselab/checkpoint_io.hpp"
#include "noiselab/errors.hpp"
#include "noiselab/manifest.hpp"
#include "noiselab/model.hpp"
#include "noiselab/pipeline.hpp"
#include "noiselab/tensor_io.hpp"
#include "noiselab/textures.hpp"

using namespace noiselab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "noiselab_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 2x1 8-bit grayscale PNG with pixel values 128 and 255.
const unsigned char kTinyPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
    0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x01,
    0x08, 0x00, 0x00, 0x00, 0x00, 0xd1, 0x49, 0x20, 0x56, 0x00, 0x00, 0x00,
    0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0xda, 0x63, 0x68, 0xf8, 0x0f, 0x00,
    0x02, 0x02, 0x01, 0x80, 0xfd, 0xf2, 0xfc, 0xf4, 0x00, 0x00, 0x00, 0x00,
    0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

Manifest tiny_manifest() {
    Manifest m;
    ManifestRecord clean;
    clean.id = "clean_0";
    clean.path = "clean_0.nsmt";
    clean.role = "clean";
    m.records.push_back(clean);

    ManifestRecord corr;
    corr.id = "img_0";
    corr.path = "img_0.nsmt";
    corr.role = "corrupted";
    corr.clean_id = "clean_0";
    NoiseStrengths s;
    s[Primitive::Gaussian] = 0.25;
    s[Primitive::Clean] = 0.75;
    corr.strengths = s;
    corr.seed = RngStream::root(7).child("field", 3);
    corr.order = default_order();
    corr.metadata["iso"] = 100.0;
    corr.metadata["device"] = std::string("phone-a");
    m.records.push_back(corr);
    return m;
}

} // namespace

TEST_CASE("tensor file round trip is exact at f32") {
    const fs::path dir = temp_dir("tensor_io");
    const ImageTensor x =
        procedural_texture("all", 3, 17, RngStream::root(1).child("t", 0));
    const std::string path = (dir / "x.nsmt").string();
    write_tensor(path, x);
    const ImageTensor y = read_tensor(path);
    REQUIRE(y.same_shape(x));
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(y.data[i] == static_cast<double>(static_cast<float>(x.data[i])));

    // A second round trip is bit-identical on disk.
    const std::string path2 = (dir / "y.nsmt").string();
    write_tensor(path2, y);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("tensor file errors carry byte offsets and expectations") {
    const fs::path dir = temp_dir("tensor_errors");
    const ImageTensor x(1, 4, 4, 0.5);
    const std::string path = (dir / "x.nsmt").string();
    write_tensor(path, x);

    std::string bytes = slurp(path);
    {
        std::ofstream out(dir / "truncated.nsmt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
    }
    try {
        read_tensor((dir / "truncated.nsmt").string());
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        const std::string what = e.what();
        CHECK(what.find("expected") != std::string::npos);
        CHECK(what.find("88") != std::string::npos); // 24 header + 64 payload bytes
    }
    {
        std::string bad = bytes;
        bad[0] = 'X';
        std::ofstream out(dir / "badmagic.nsmt", std::ios::binary);
        out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    try {
        read_tensor((dir / "badmagic.nsmt").string());
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset() == 0);
    }
}

TEST_CASE("8-bit image import maps through division by 255") {
    const fs::path dir = temp_dir("image8");
    {
        std::ofstream out(dir / "tiny.png", std::ios::binary);
        out.write(reinterpret_cast<const char*>(kTinyPng), sizeof(kTinyPng));
    }
    const ImageTensor png = read_image8((dir / "tiny.png").string());
    REQUIRE(png.channels == 1);
    REQUIRE(png.width == 2);
    REQUIRE(png.height == 1);
    CHECK(png.data[0] == 128.0 / 255.0);
    CHECK(static_cast<float>(png.data[0]) == static_cast<float>(128.0 / 255.0));
    CHECK(png.data[1] == 1.0);

    ImageTensor img(1, 2, 3);
    img.data = {0.0, 0.25, 0.5, 0.75, 1.0, 128.0 / 255.0};
    write_pnm8((dir / "img.pgm").string(), img);
    const ImageTensor back = read_image8((dir / "img.pgm").string());
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] ==
              std::round(img.data[i] * 255.0) / 255.0);
}

TEST_CASE("manifest canonical round trip") {
    const Manifest m = tiny_manifest();
    const std::string text = serialize_manifest(m);
    const Manifest parsed = parse_manifest(text);
    REQUIRE(parsed.records.size() == m.records.size());
    CHECK(parsed.records[1].id == "img_0");
    CHECK(parsed.records[1].strengths->eta == m.records[1].strengths->eta);
    CHECK(*parsed.records[1].seed == *m.records[1].seed);
    CHECK(*parsed.records[1].order == default_order());
    CHECK(std::get<double>(parsed.records[1].metadata.at("iso")) == 100.0);
    CHECK(std::get<std::string>(parsed.records[1].metadata.at("device")) == "phone-a");

    CHECK(serialize_manifest(parsed) == text);
}

TEST_CASE("manifest validation failures name the offending id") {
    Manifest m = tiny_manifest();
    m.records[1].clean_id = "missing";
    CHECK_THROWS_WITH_AS(parse_manifest(serialize_manifest(m)),
                         doctest::Contains("img_0"), FormatError);

    Manifest dup = tiny_manifest();
    dup.records[0].id = "img_0";
    dup.records[0].role = "clean";
    dup.records[1].clean_id = "img_0";
    CHECK_THROWS_WITH_AS(parse_manifest(serialize_manifest(dup)),
                         doctest::Contains("duplicate"), FormatError);

    Manifest badrole = tiny_manifest();
    badrole.records[0].role = "other";
    CHECK_THROWS_AS(parse_manifest(serialize_manifest(badrole)), FormatError);
}

TEST_CASE("checkpoint round trip is bit-exact and digest-checked") {
    const fs::path dir = temp_dir("checkpoint");
    EncoderConfig cfg;
    cfg.input_size = 8;
    cfg.conv_channels = {2};
    cfg.fc_dims = {};
    cfg.embed_dim = 8;
    cfg.init_seed = 3;
    const EncoderNet net(cfg);

    EncoderCheckpoint ckpt;
    ckpt.config = cfg;
    ckpt.encoder_params = net.init_params();
    ckpt.head_params = QuantHead(cfg.embed_dim).init_params(RngStream::root(4).child("h", 0));
    ckpt.stage = TrainStage::Finetuned;
    ckpt.root_seed = 99;
    ckpt.train_log_digest = 0x1234;

    const std::string path = (dir / "model.nsmc").string();
    save_checkpoint(path, ckpt);
    const EncoderCheckpoint back = load_checkpoint(path);
    CHECK(back.encoder_params == ckpt.encoder_params);
    CHECK(back.head_params == ckpt.head_params);
    CHECK(back.config == cfg);
    CHECK(back.stage == TrainStage::Finetuned);
    CHECK(back.root_seed == 99);
    CHECK(back.train_log_digest == 0x1234);
    CHECK(checkpoint_digest(back) == checkpoint_digest(ckpt));

    // Corrupting one payload byte trips the digest check.
    std::string bytes = slurp(path);
    bytes[bytes.size() - 5] = static_cast<char>(bytes[bytes.size() - 5] ^ 0x40);
    {
        std::ofstream out(dir / "bad.nsmc", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint((dir / "bad.nsmc").string()), FormatError);
}

TEST_CASE("cmd_synthesize is deterministic and worker-count independent") {
    const fs::path dir_a = temp_dir("synth_a");
    const fs::path dir_b = temp_dir("synth_b");
    const fs::path dir_c = temp_dir("synth_c");

    cli::SynthesizeOptions opts;
    opts.seed = 12;
    opts.count = 10;
    opts.image_size = 16;
    opts.clean_pool = 3;

    opts.out_dir = dir_a.string();
    opts.workers = 1;
    cli::cmd_synthesize(opts);
    opts.out_dir = dir_b.string();
    cli::cmd_synthesize(opts);
    opts.out_dir = dir_c.string();
    opts.workers = 4;
    cli::cmd_synthesize(opts);

    CHECK(slurp(dir_a / "manifest.jsonl") == slurp(dir_b / "manifest.jsonl"));
    CHECK(slurp(dir_a / "manifest.jsonl") == slurp(dir_c / "manifest.jsonl"));
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        if (entry.path().extension() != ".nsmt") continue;
        const std::string name = entry.path().filename().string();
        CHECK(slurp(entry.path()) == slurp(dir_b / name));
        CHECK(slurp(entry.path()) == slurp(dir_c / name));
    }
}

TEST_CASE("cmd_synthesize: zero count still writes a valid manifest") {
    const fs::path dir = temp_dir("synth_zero");
    cli::SynthesizeOptions opts;
    opts.out_dir = dir.string();
    opts.count = 0;
    opts.clean_pool = 2;
    opts.image_size = 8;
    const Manifest m = cli::cmd_synthesize(opts);
    CHECK(m.records.size() == 2); // clean pool only
    CHECK(load_manifest((dir / "manifest.jsonl").string()).records.size() == 2);
}

TEST_CASE("cmd_synthesize: sampled strengths look exchangeable") {
    const fs::path dir = temp_dir("synth_stats");
    cli::SynthesizeOptions opts;
    opts.out_dir = dir.string();
    opts.count = 1000;
    opts.image_size = 8;
    opts.clean_pool = 4;
    opts.seed = 5;
    const Manifest m = cli::cmd_synthesize(opts);

    std::array<double, kStrengthCount> sums{};
    std::size_t n = 0;
    for (const ManifestRecord& rec : m.records) {
        if (rec.role != "corrupted") continue;
        for (std::size_t c = 0; c < kStrengthCount; ++c) sums[c] += (*rec.strengths)[c];
        ++n;
    }
    REQUIRE(n == 1000);
    for (std::size_t c = 0; c < kStrengthCount; ++c)
        CHECK(std::abs(sums[c] / static_cast<double>(n) - 1.0 / 6.0) < 0.02);
}

TEST_CASE("stored corrupted tensors re-synthesize from manifest provenance") {
    const fs::path dir = temp_dir("resynth");
    cli::SynthesizeOptions opts;
    opts.out_dir = dir.string();
    opts.count = 4;
    opts.image_size = 16;
    opts.clean_pool = 2;
    opts.seed = 31;
    const Manifest m = cli::cmd_synthesize(opts);

    for (const ManifestRecord& rec : m.records) {
        if (rec.role != "corrupted") continue;
        const ManifestRecord* src = m.find(*rec.clean_id);
        REQUIRE(src != nullptr);
        const ImageTensor clean = read_tensor((dir / src->path).string());
        NoiseSample sample;
        sample.clean_id = *rec.clean_id;
        sample.strengths = *rec.strengths;
        sample.seed_path = *rec.seed;
        sample.order = *rec.order;
        const ImageTensor redo = resynthesize(clean, sample);
        const ImageTensor stored = read_tensor((dir / rec.path).string());
        // Stored tensors are f32; the f64 resynthesis must round to them.
        REQUIRE(redo.same_shape(stored));
        for (std::size_t i = 0; i < redo.data.size(); ++i)
            CHECK(static_cast<float>(redo.data[i]) == static_cast<float>(stored.data[i]));
    }
}

namespace {

// Shared fixture: synthesize a small labeled dataset and train a fast model.
struct TrainedFixture {
    fs::path dir;
    std::string manifest_path;
    std::string checkpoint_path;

    explicit TrainedFixture(const std::string& name, std::size_t count = 24) {
        dir = temp_dir(name);
        cli::SynthesizeOptions sopts;
        sopts.out_dir = dir.string();
        sopts.count = count;
        sopts.image_size = 16;
        sopts.clean_pool = 4;
        sopts.seed = 21;
        cli::cmd_synthesize(sopts);
        manifest_path = (dir / "manifest.jsonl").string();

        cli::TrainOptions topts;
        topts.manifest_path = manifest_path;
        topts.mode = "scratch";
        topts.out_checkpoint = (dir / "model.nsmc").string();
        topts.encoder.input_size = 16;
        topts.encoder.conv_channels = {4};
        topts.encoder.fc_dims = {16};
        topts.encoder.embed_dim = 8;
        topts.encoder.init_seed = 1;
        topts.epochs = 3;
        topts.batch = 8;
        topts.lr = 0.2;
        topts.seed = 2;
        topts.log_csv = (dir / "log.csv").string();
        cli::cmd_train(topts);
        checkpoint_path = topts.out_checkpoint;
    }
};

} // namespace

TEST_CASE("cmd_train writes logs and honors the zero-epoch schedule") {
    const TrainedFixture fx("train_basic");
    const std::string log = slurp(fx.dir / "log.csv");
    CHECK(log.find("epoch,split,loss") == 0);
    CHECK(log.find("train") != std::string::npos);
    CHECK(log.find("val") != std::string::npos);

    cli::TrainOptions topts;
    topts.manifest_path = fx.manifest_path;
    topts.mode = "scratch";
    topts.encoder.input_size = 16;
    topts.encoder.conv_channels = {4};
    topts.encoder.fc_dims = {16};
    topts.encoder.embed_dim = 8;
    topts.encoder.init_seed = 1;
    topts.epochs = 0;
    const EncoderCheckpoint zero = cli::cmd_train(topts);
    CHECK(zero.encoder_params == EncoderNet(topts.encoder).init_params());

    topts.mode = "nonsense";
    CHECK_THROWS_AS(cli::cmd_train(topts), std::invalid_argument);
}

TEST_CASE("cmd_estimate: window math and determinism") {
    const TrainedFixture fx("estimate_basic");

    cli::EstimateOptions eopts;
    eopts.checkpoint_path = fx.checkpoint_path;
    eopts.manifest_path = fx.manifest_path;
    eopts.windows = 5;
    eopts.seed = 17;
    eopts.out_csv = (fx.dir / "preds.csv").string();
    const cli::PredictionFile pf = cli::cmd_estimate(eopts);
    REQUIRE(pf.rows.size() == 24);

    // 16x16 images with a 16-window model: a single possible crop, so the
    // mean equals the one-crop prediction and stddevs vanish.
    const EncoderCheckpoint ckpt = load_checkpoint(fx.checkpoint_path);
    const Manifest m = load_manifest(fx.manifest_path);
    const ManifestRecord* rec = m.find(pf.rows[0].id);
    const ImageTensor img = read_tensor((fx.dir / rec->path).string());
    const NoiseStrengths direct = predict_strengths(ckpt, img);
    for (std::size_t c = 0; c < kStrengthCount; ++c) {
        CHECK(pf.rows[0].mean[c] == doctest::Approx(direct[c]).epsilon(1e-12));
        CHECK(pf.rows[0].stddev[c] == 0.0);
    }

    // Byte-identical reruns, independent of worker count.
    cli::EstimateOptions again = eopts;
    again.out_csv = (fx.dir / "preds2.csv").string();
    again.workers = 3;
    cli::cmd_estimate(again);
    CHECK(slurp(fx.dir / "preds.csv") == slurp(fx.dir / "preds2.csv"));

    const cli::PredictionFile parsed = cli::read_predictions_csv(eopts.out_csv);
    REQUIRE(parsed.rows.size() == pf.rows.size());
    CHECK(parsed.checkpoint_digest == pf.checkpoint_digest);
    CHECK(parsed.rows[3].mean.eta == pf.rows[3].mean.eta);
}

TEST_CASE("cmd_estimate: multi-window means equal the hand average") {
    const TrainedFixture fx("estimate_windows");

    // Build one larger heterogeneous image so windows truly differ.
    const ImageTensor big =
        procedural_texture("structured", 1, 48, RngStream::root(77).child("big", 0));
    write_tensor((fx.dir / "big.nsmt").string(), big);
    Manifest m = load_manifest(fx.manifest_path);
    ManifestRecord rec;
    rec.id = "big_0";
    rec.path = "big.nsmt";
    rec.role = "external";
    m.records.push_back(rec);
    save_manifest(fx.manifest_path, m);

    cli::EstimateOptions eopts;
    eopts.checkpoint_path = fx.checkpoint_path;
    eopts.manifest_path = fx.manifest_path;
    eopts.role_filter = "external";
    eopts.windows = 5;
    eopts.seed = 3;
    const cli::PredictionFile pf = cli::cmd_estimate(eopts);
    REQUIRE(pf.rows.size() == 1);

    // Replicate the documented window-draw scheme by hand.
    const EncoderCheckpoint ckpt = load_checkpoint(fx.checkpoint_path);
    auto sampler = RngStream::root(3).child("windows", 0).sampler();
    std::array<double, kStrengthCount> acc{};
    for (int w = 0; w < 5; ++w) {
        const std::size_t top = sampler.uniform_below(48 - 16 + 1);
        const std::size_t left = sampler.uniform_below(48 - 16 + 1);
        ImageTensor crop(1, 16, 16);
        for (std::size_t y = 0; y < 16; ++y)
            for (std::size_t x = 0; x < 16; ++x) crop.at(0, y, x) = big.at(0, top + y, left + x);
        const NoiseStrengths p = predict_strengths(ckpt, crop);
        for (std::size_t c = 0; c < kStrengthCount; ++c) acc[c] += p[c];
    }
    for (std::size_t c = 0; c < kStrengthCount; ++c)
        CHECK(pf.rows[0].mean[c] == doctest::Approx(acc[c] / 5.0).epsilon(1e-12));

    // windows = 1 differs from windows = 5 on heterogeneous content.
    cli::EstimateOptions one = eopts;
    one.windows = 1;
    const cli::PredictionFile pf1 = cli::cmd_estimate(one);
    CHECK(pf1.rows[0].mean.eta != pf.rows[0].mean.eta);
}

TEST_CASE("cmd_analyze: perfect predictions and graceful degradation") {
    const TrainedFixture fx("analyze_basic");
    const Manifest m = load_manifest(fx.manifest_path);

    // Hand-write a predictions file that echoes the ground truth.
    const std::string preds_path = (fx.dir / "perfect.csv").string();
    {
        std::ofstream csv(preds_path);
        csv << "id,windows";
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            csv << ",mean_" << primitive_name(static_cast<Primitive>(c));
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            csv << ",std_" << primitive_name(static_cast<Primitive>(c));
        csv << ",checkpoint_digest,manifest_digest,seed\n";
        for (const ManifestRecord& rec : m.records) {
            if (rec.role != "corrupted") continue;
            csv << rec.id << ",1";
            for (std::size_t c = 0; c < kStrengthCount; ++c)
                csv << "," << cli::format_double((*rec.strengths)[c]);
            for (std::size_t c = 0; c < kStrengthCount; ++c) csv << ",0";
            csv << ",deadbeef,deadbeef,0\n";
        }
    }

    cli::AnalyzeOptions aopts;
    aopts.predictions_csv = preds_path;
    aopts.manifest_path = fx.manifest_path;
    aopts.analyses = {"metrics", "residual", "classification", "shap"};
    aopts.out_prefix = (fx.dir / "report").string();
    const cli::AnalysisReport rep = cli::cmd_analyze(aopts);

    bool saw_rmse = false, saw_skip = false, saw_flag = false;
    for (const cli::MetricRecord& r : rep.records) {
        if (r.metric == "rmse") {
            CHECK(r.value == 0.0);
            saw_rmse = true;
        }
        if (r.metric == "r_squared") CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
        if (r.metric == "skipped" && r.subset.find("shap") != std::string::npos)
            saw_skip = true; // no metadata in this manifest
        if (r.metric == "threshold_accuracy_definition") saw_flag = true;
        if (r.metric == "dominant_accuracy") CHECK(r.value == 1.0);
        if (r.metric == "threshold_accuracy") CHECK(r.value == 1.0);
    }
    CHECK(saw_rmse);
    CHECK(saw_skip);
    CHECK(saw_flag);

    CHECK(fs::exists(fx.dir / "report.csv"));
    CHECK(fs::exists(fx.dir / "report.json"));
    CHECK(fs::exists(fx.dir / "report_sankey.csv"));
    const std::string csv_text = slurp(fx.dir / "report.csv");
    CHECK(csv_text.find("metric,subset,value,ci_low,ci_high,n,checkpoint_digest") == 0);
    CHECK(csv_text.find("deadbeef") != std::string::npos);
}

TEST_CASE("cmd_analyze: depth pipeline recovers constructed slopes") {
    const fs::path dir = temp_dir("analyze_depth");

    // Manifest of external records with depth/arm metadata.
    Manifest m;
    auto s = RngStream::root(55).child("noise", 0).sampler();
    std::vector<double> truths;
    std::size_t idx = 0;
    for (int arm = 0; arm < 2; ++arm) {
        for (int rep = 0; rep < 3; ++rep) {
            for (int d = 100; d <= 800; d += 50) {
                ManifestRecord rec;
                rec.id = "img_" + std::to_string(idx++);
                rec.path = "unused.nsmt";
                rec.role = "external";
                rec.metadata["depth_um"] = static_cast<double>(d);
                rec.metadata["arm"] = std::string(arm == 0 ? "fixed" : "gained");
                m.records.push_back(rec);
                const double base = arm == 0 ? 0.0004 * d : 0.15;
                truths.push_back(std::min(1.0, std::max(0.0, base + s.normal(0.0, 0.02))));
            }
        }
    }
    const std::string manifest_path = (dir / "manifest.jsonl").string();
    save_manifest(manifest_path, m);

    const std::string preds_path = (dir / "preds.csv").string();
    {
        std::ofstream csv(preds_path);
        csv << "id,windows";
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            csv << ",mean_" << primitive_name(static_cast<Primitive>(c));
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            csv << ",std_" << primitive_name(static_cast<Primitive>(c));
        csv << ",checkpoint_digest,manifest_digest,seed\n";
        for (std::size_t i = 0; i < m.records.size(); ++i) {
            csv << m.records[i].id << ",1";
            // Put the constructed signal on the anisotropic component.
            for (std::size_t c = 0; c < kStrengthCount; ++c)
                csv << ","
                    << cli::format_double(
                           c == static_cast<std::size_t>(Primitive::Anisotropic) ? truths[i]
                                                                                 : 0.1);
            for (std::size_t c = 0; c < kStrengthCount; ++c) csv << ",0";
            csv << ",cafe,cafe,0\n";
        }
    }

    cli::AnalyzeOptions aopts;
    aopts.predictions_csv = preds_path;
    aopts.manifest_path = manifest_path;
    aopts.analyses = {"depth"};
    const cli::AnalysisReport rep = cli::cmd_analyze(aopts);

    double slope_fixed = 0.0, slope_se = 0.0, p_aniso = 1.0;
    std::string aniso_class;
    for (const cli::MetricRecord& r : rep.records) {
        if (r.metric == "depth_slope" && r.subset == "anisotropic|fixed") {
            slope_fixed = r.value;
            slope_se = (r.ci_high.value() - r.ci_low.value()) / 2.0;
        }
        if (r.metric == "slope_diff_p" && r.subset == "anisotropic") p_aniso = r.value;
        if (r.metric == "effect_class" && r.subset.find("anisotropic") == 0)
            aniso_class = r.subset;
    }
    CHECK(std::abs(slope_fixed - 0.0004) <= 3.0 * slope_se);
    CHECK(p_aniso < 0.001);
    CHECK(aniso_class == "anisotropic:Large");
}

TEST_CASE("analyze rejects prediction ids missing from the manifest") {
    const TrainedFixture fx("analyze_ids");
    const std::string preds_path = (fx.dir / "bogus.csv").string();
    {
        std::ofstream csv(preds_path);
        csv << "id,windows";
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            csv << ",mean_" << primitive_name(static_cast<Primitive>(c));
        for (std::size_t c = 0; c < kStrengthCount; ++c)
            csv << ",std_" << primitive_name(static_cast<Primitive>(c));
        csv << ",checkpoint_digest,manifest_digest,seed\n";
        csv << "ghost,1,0,0,0,0,0,0,0,0,0,0,0,0,a,b,0\n";
    }
    cli::AnalyzeOptions aopts;
    aopts.predictions_csv = preds_path;
    aopts.manifest_path = fx.manifest_path;
    CHECK_THROWS_AS(cli::cmd_analyze(aopts), std::invalid_argument);
}

TEST_CASE("channel adaptation for estimation on foreign data") {
    ImageTensor rgb(3, 2, 2, 0.0);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 4; ++i) rgb.data[c * 4 + i] = 0.2 * (c + 1);
    const ImageTensor gray = cli::to_channels(rgb, 1);
    CHECK(gray.channels == 1);
    CHECK(gray.data[0] == doctest::Approx(0.4).epsilon(1e-12));
    const ImageTensor back = cli::to_channels(gray, 3);
    CHECK(back.channels == 3);
    CHECK(back.data[0] == back.data[8]);
    CHECK_THROWS_AS(cli::to_channels(rgb, 2), std::invalid_argument);
}

TEST_CASE("end-to-end rerun produces byte-identical artifacts") {
    auto run = [&](const std::string& name, std::size_t workers) {
        const fs::path dir = temp_dir(name);
        cli::SynthesizeOptions sopts;
        sopts.out_dir = dir.string();
        sopts.count = 12;
        sopts.image_size = 16;
        sopts.clean_pool = 3;
        sopts.seed = 77;
        sopts.workers = workers;
        cli::cmd_synthesize(sopts);

        cli::TrainOptions topts;
        topts.manifest_path = (dir / "manifest.jsonl").string();
        topts.mode = "scratch";
        topts.out_checkpoint = (dir / "model.nsmc").string();
        topts.encoder.input_size = 16;
        topts.encoder.conv_channels = {4};
        topts.encoder.fc_dims = {16};
        topts.encoder.embed_dim = 8;
        topts.encoder.init_seed = 5;
        topts.epochs = 2;
        topts.batch = 6;
        topts.lr = 0.2;
        topts.seed = 9;
        cli::cmd_train(topts);

        cli::EstimateOptions eopts;
        eopts.checkpoint_path = topts.out_checkpoint;
        eopts.manifest_path = topts.manifest_path;
        eopts.out_csv = (dir / "preds.csv").string();
        eopts.seed = 13;
        eopts.workers = workers;
        cli::cmd_estimate(eopts);

        cli::AnalyzeOptions aopts;
        aopts.predictions_csv = eopts.out_csv;
        aopts.manifest_path = topts.manifest_path;
        aopts.analyses = {"metrics", "residual", "classification"};
        aopts.out_prefix = (dir / "report").string();
        cli::cmd_analyze(aopts);
        return dir;
    };

    const fs::path a = run("e2e_a", 1);
    const fs::path b = run("e2e_b", 2);
    for (const char* name : {"preds.csv", "report.csv", "report.json", "manifest.jsonl"})
        CHECK(slurp(a / name) == slurp(b / name));
    CHECK(slurp(a / "model.nsmc") == slurp(b / "model.nsmc"));
}
