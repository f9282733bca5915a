#include "noiselab/checkpoint_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "noiselab/digest.hpp"
#include "noiselab/errors.hpp"

namespace noiselab {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'N', 'S', 'M', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint32_t get_u32le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::string params_to_bytes(const std::vector<double>& params) {
    std::string bytes;
    bytes.reserve(8 * params.size());
    for (double v : params) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64le(bytes, bits);
    }
    return bytes;
}

std::vector<double> params_from_bytes(const unsigned char* p, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t bits = get_u64le(p + 8 * i);
        std::memcpy(&out[i], &bits, 8);
    }
    return out;
}

json config_to_json(const EncoderConfig& c) {
    json j;
    j["input_size"] = c.input_size;
    j["in_channels"] = c.in_channels;
    j["conv_channels"] = c.conv_channels;
    j["fc_dims"] = c.fc_dims;
    j["embed_dim"] = c.embed_dim;
    j["activation"] = c.activation;
    j["init_seed"] = c.init_seed;
    j["normalize_embeddings"] = c.normalize_embeddings;
    return j;
}

EncoderConfig config_from_json(const json& j) {
    EncoderConfig c;
    c.input_size = j.at("input_size").get<std::size_t>();
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
    c.fc_dims = j.at("fc_dims").get<std::vector<std::size_t>>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.activation = j.at("activation").get<std::string>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.normalize_embeddings = j.at("normalize_embeddings").get<bool>();
    return c;
}

} // namespace

void save_checkpoint(const std::string& path, const EncoderCheckpoint& ckpt) {
    const std::string enc_bytes = params_to_bytes(ckpt.encoder_params);
    const std::string head_bytes = params_to_bytes(ckpt.head_params);

    json j;
    j["config"] = config_to_json(ckpt.config);
    j["stage"] = std::string(train_stage_name(ckpt.stage));
    j["rng_kind"] = ckpt.rng_kind;
    j["root_seed"] = ckpt.root_seed;
    j["aniso_kernel_id"] = ckpt.aniso_kernel_id;
    j["aniso_kernel"] = aniso_kernel().weights;
    j["train_log_digest"] = to_hex(ckpt.train_log_digest);
    j["encoder_digest"] = to_hex(fnv1a64(enc_bytes));
    j["head_digest"] = to_hex(fnv1a64(head_bytes));
    const std::string header = j.dump();

    std::string buf;
    buf.append(kMagic, 4);
    put_u32le(buf, kVersion);
    put_u64le(buf, header.size());
    buf += header;
    put_u64le(buf, ckpt.encoder_params.size());
    buf += enc_bytes;
    put_u64le(buf, ckpt.head_params.size());
    buf += head_bytes;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

EncoderCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw FormatError("load_checkpoint: bad magic in " + path, 0);
    if (buf.size() < 8 || get_u32le(buf.data() + 4) != kVersion)
        throw FormatError("load_checkpoint: unsupported version", 4);
    if (buf.size() < 16) throw FormatError("load_checkpoint: truncated header", buf.size());
    const std::uint64_t json_len = get_u64le(buf.data() + 8);
    std::size_t pos = 16;
    if (buf.size() < pos + json_len)
        throw FormatError("load_checkpoint: truncated JSON block", buf.size());

    json j;
    try {
        j = json::parse(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                        buf.begin() + static_cast<std::ptrdiff_t>(pos + json_len));
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_checkpoint: ") + e.what(), pos);
    }
    pos += json_len;

    auto read_block = [&](std::vector<double>& out) {
        if (buf.size() < pos + 8)
            throw FormatError("load_checkpoint: truncated block length", buf.size());
        const std::uint64_t count = get_u64le(buf.data() + pos);
        pos += 8;
        if (buf.size() < pos + 8 * count)
            throw FormatError("load_checkpoint: truncated parameter block", buf.size());
        out = params_from_bytes(buf.data() + pos, count);
        pos += 8 * count;
    };

    EncoderCheckpoint ckpt;
    ckpt.config = config_from_json(j.at("config"));
    ckpt.stage = train_stage_from_name(j.at("stage").get<std::string>());
    ckpt.rng_kind = j.at("rng_kind").get<std::string>();
    ckpt.root_seed = j.at("root_seed").get<std::uint64_t>();
    ckpt.aniso_kernel_id = j.at("aniso_kernel_id").get<std::string>();
    ckpt.train_log_digest =
        std::stoull(j.at("train_log_digest").get<std::string>(), nullptr, 16);
    read_block(ckpt.encoder_params);
    read_block(ckpt.head_params);

    if (to_hex(fnv1a64(params_to_bytes(ckpt.encoder_params))) !=
        j.at("encoder_digest").get<std::string>())
        throw FormatError("load_checkpoint: encoder block digest mismatch", 16);
    if (to_hex(fnv1a64(params_to_bytes(ckpt.head_params))) !=
        j.at("head_digest").get<std::string>())
        throw FormatError("load_checkpoint: head block digest mismatch", 16);
    return ckpt;
}

std::uint64_t checkpoint_digest(const EncoderCheckpoint& ckpt) {
    std::uint64_t h = fnv1a64(config_to_json(ckpt.config).dump());
    const std::string enc = params_to_bytes(ckpt.encoder_params);
    const std::string head = params_to_bytes(ckpt.head_params);
    h = fnv1a64(enc.data(), enc.size(), h);
    h = fnv1a64(head.data(), head.size(), h);
    return h;
}

} // namespace noiselab
