#include "noiselab/tensor_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <png.h>

#include "noiselab/errors.hpp"

namespace noiselab {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'M', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 1;

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

void write_tensor(const std::string& path, const ImageTensor& x) {
    std::string buf;
    buf.reserve(24 + 4 * x.size());
    buf.append(kMagic, 4);
    put_u32le(buf, kVersion);
    put_u32le(buf, kDtypeF32);
    put_u32le(buf, static_cast<std::uint32_t>(x.channels));
    put_u32le(buf, static_cast<std::uint32_t>(x.height));
    put_u32le(buf, static_cast<std::uint32_t>(x.width));
    for (double v : x.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32le(buf, bits);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ImageTensor read_tensor(const std::string& path) {
    const std::vector<unsigned char> buf = slurp(path);
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw FormatError("read_tensor: bad magic in " + path, 0);
    if (buf.size() < 8) throw FormatError("read_tensor: truncated header", 4);
    if (get_u32le(buf.data() + 4) != kVersion)
        throw FormatError("read_tensor: unsupported version", 4);
    if (buf.size() < 12) throw FormatError("read_tensor: truncated header", 8);
    if (get_u32le(buf.data() + 8) != kDtypeF32)
        throw FormatError("read_tensor: unsupported dtype code", 8);
    if (buf.size() < 24) throw FormatError("read_tensor: truncated header", buf.size());

    ImageTensor x;
    x.channels = get_u32le(buf.data() + 12);
    x.height = get_u32le(buf.data() + 16);
    x.width = get_u32le(buf.data() + 20);
    const std::size_t count = x.channels * x.height * x.width;
    const std::size_t expected = 24 + 4 * count;
    if (buf.size() != expected)
        throw FormatError("read_tensor: payload length mismatch, expected " +
                              std::to_string(expected) + " bytes, got " +
                              std::to_string(buf.size()),
                          std::min(buf.size(), expected));
    x.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32le(buf.data() + 24 + 4 * i);
        float f;
        std::memcpy(&f, &bits, 4);
        x.data[i] = static_cast<double>(f);
    }
    return x;
}

// ---------------------------------------------------------------------------
// PNG / PNM
// ---------------------------------------------------------------------------

namespace {

bool has_suffix(const std::string& s, const char* suffix) {
    const std::size_t n = std::strlen(suffix);
    if (s.size() < n) return false;
    std::string tail = s.substr(s.size() - n);
    std::transform(tail.begin(), tail.end(), tail.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return tail == suffix;
}

ImageTensor read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("read_png: malformed PNG " + path, 0);
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const std::size_t width = png_get_image_width(png, info);
    const std::size_t height = png_get_image_height(png, info);
    const std::size_t channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("read_png: unsupported channel count", 0);
    }

    std::vector<unsigned char> rowbuf(width * channels);
    ImageTensor x(channels, height, width);
    for (std::size_t y = 0; y < height; ++y) {
        png_read_row(png, rowbuf.data(), nullptr);
        for (std::size_t xx = 0; xx < width; ++xx)
            for (std::size_t c = 0; c < channels; ++c)
                x.at(c, y, xx) = static_cast<double>(rowbuf[xx * channels + c]) / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return x;
}

ImageTensor read_pnm(const std::string& path) {
    const std::vector<unsigned char> buf = slurp(path);
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < buf.size()) {
            if (std::isspace(buf[pos])) {
                ++pos;
            } else if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> std::size_t {
        skip_space();
        if (pos >= buf.size() || !std::isdigit(buf[pos]))
            throw FormatError("read_pnm: expected integer", pos);
        std::size_t v = 0;
        while (pos < buf.size() && std::isdigit(buf[pos])) v = v * 10 + (buf[pos++] - '0');
        return v;
    };

    if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6'))
        throw FormatError("read_pnm: not a binary PGM/PPM", 0);
    const std::size_t channels = buf[1] == '5' ? 1 : 3;
    pos = 2;
    const std::size_t width = read_int();
    const std::size_t height = read_int();
    const std::size_t maxval = read_int();
    if (maxval != 255) throw FormatError("read_pnm: only maxval 255 supported", pos);
    ++pos; // single whitespace after maxval
    const std::size_t need = width * height * channels;
    if (buf.size() - pos < need)
        throw FormatError("read_pnm: truncated payload, expected " + std::to_string(need) +
                              " bytes",
                          buf.size());
    ImageTensor x(channels, height, width);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t xx = 0; xx < width; ++xx)
            for (std::size_t c = 0; c < channels; ++c)
                x.at(c, y, xx) =
                    static_cast<double>(buf[pos + (y * width + xx) * channels + c]) / 255.0;
    return x;
}

} // namespace

ImageTensor read_image8(const std::string& path) {
    if (has_suffix(path, ".png")) return read_png(path);
    if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm")) return read_pnm(path);
    throw std::invalid_argument("read_image8: unsupported extension in " + path);
}

void write_pnm8(const std::string& path, const ImageTensor& x) {
    if (x.channels != 1 && x.channels != 3)
        throw std::invalid_argument("write_pnm8: needs 1 or 3 channels");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (x.channels == 1 ? "P5" : "P6") << "\n"
        << x.width << " " << x.height << "\n255\n";
    for (std::size_t y = 0; y < x.height; ++y)
        for (std::size_t xx = 0; xx < x.width; ++xx)
            for (std::size_t c = 0; c < x.channels; ++c) {
                const double v = std::clamp(x.at(c, y, xx), 0.0, 1.0);
                out.put(static_cast<char>(std::lround(v * 255.0)));
            }
}

ImageTensor load_image_any(const std::string& path) {
    if (has_suffix(path, ".nsmt")) return read_tensor(path);
    return read_image8(path);
}

} // namespace noiselab
