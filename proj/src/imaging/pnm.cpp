#include "clearing/pnm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <system_error>

#include "clearing/errors.hpp"

namespace clearing {

namespace {

class PnmReader {
public:
    explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw FormatError("pnm: expected integer");
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000L) throw FormatError("pnm: integer too large");
            ++pos_;
        }
        return v;
    }

    std::uint8_t read_raw() {
        if (pos_ >= bytes_.size()) throw FormatError("pnm: truncated pixel data");
        return bytes_[pos_++];
    }

    // Exactly one whitespace byte separates the header from binary data.
    void consume_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("pnm: malformed header");
        ++pos_;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint8_t scale(long v, long maxval) {
    if (v > maxval) throw FormatError("pnm: sample exceeds maxval");
    if (maxval == 255) return static_cast<std::uint8_t>(v);
    return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
}

std::vector<std::uint8_t> header(const char* magic, int w, int h) {
    const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    return {s.begin(), s.end()};
}

}  // namespace

AnyImage decode_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("not a PNM file");
    const char kind = static_cast<char>(bytes[1]);
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6') throw FormatError("unsupported PNM variant");
    PnmReader r(bytes.subspan(2));
    const long w = r.read_int();
    const long h = r.read_int();
    const long maxval = r.read_int();
    if (w <= 0 || h <= 0 || w > 65535 || h > 65535) throw FormatError("pnm: bad dimensions");
    if (maxval <= 0 || maxval > 255) throw FormatError("pnm: only 8-bit maxval supported");
    const bool binary = kind == '5' || kind == '6';
    const bool color = kind == '3' || kind == '6';
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (binary) {
        r.consume_single_space();
        if (r.remaining() < n * (color ? 3 : 1)) throw FormatError("pnm: truncated pixel data");
    }
    auto sample = [&]() { return scale(binary ? r.read_raw() : r.read_int(), maxval); };

    if (!color) {
        Gray8Image img(static_cast<int>(w), static_cast<int>(h));
        for (auto& v : img.values()) v = sample();
        return img;
    }
    Rgb8Image img(static_cast<int>(w), static_cast<int>(h));
    for (auto& px : img.values()) {
        px.r = sample();
        px.g = sample();
        px.b = sample();
    }
    return img;
}

std::vector<std::uint8_t> encode_pgm(const Gray8Image& image) {
    auto out = header("P5", image.width(), image.height());
    out.insert(out.end(), image.values().begin(), image.values().end());
    return out;
}

std::vector<std::uint8_t> encode_ppm(const Rgb8Image& image) {
    auto out = header("P6", image.width(), image.height());
    out.reserve(out.size() + image.size() * 3);
    for (const auto& px : image.values()) {
        out.push_back(px.r);
        out.push_back(px.g);
        out.push_back(px.b);
    }
    return out;
}

std::vector<std::uint8_t> encode_pnm(const AnyImage& image) {
    return std::visit(
        [](const auto& img) {
            if constexpr (std::is_same_v<std::decay_t<decltype(img)>, Gray8Image>) {
                return encode_pgm(img);
            } else {
                return encode_ppm(img);
            }
        },
        image);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

AnyImage read_pnm(const std::filesystem::path& path) { return decode_pnm(read_file_bytes(path)); }

Gray8Image read_pgm(const std::filesystem::path& path) {
    auto img = read_pnm(path);
    if (auto* g = std::get_if<Gray8Image>(&img)) return std::move(*g);
    throw FormatError(path.string() + ": expected a graymap");
}

void write_pnm(const std::filesystem::path& path, const AnyImage& image) {
    write_file_atomic(path, encode_pnm(image));
}

int image_width(const AnyImage& image) {
    return std::visit([](const auto& img) { return img.width(); }, image);
}

int image_height(const AnyImage& image) {
    return std::visit([](const auto& img) { return img.height(); }, image);
}

}  // namespace clearing
