#include "clearing/spectral_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "clearing/errors.hpp"
#include "clearing/pnm.hpp"

namespace clearing {

using nlohmann::json;

namespace {

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::size_t dtype_size(const std::string& dtype) {
    if (dtype == "uint8") return 1;
    if (dtype == "uint16") return 2;
    if (dtype == "float32") return 4;
    if (dtype == "float64") return 8;
    throw FormatError("unsupported cube dtype '" + dtype + "'");
}

template <typename T>
T load(const std::uint8_t* p, bool swap) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, p, sizeof(T));
    if (swap) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

std::filesystem::path data_path_for(const std::filesystem::path& header_path, const json& header) {
    if (header.contains("data_file")) return header_path.parent_path() / header["data_file"].get<std::string>();
    auto p = header_path;
    p.replace_extension(".raw");
    return p;
}

}  // namespace

ReferenceLibrary library_from_json(const json& j) {
    if (!j.is_object() || j.empty()) throw FormatError("library must be a non-empty object of label -> spectra");
    ReferenceLibrary lib;
    for (const auto& [label, spectra] : j.items()) {
        if (!spectra.is_array() || spectra.empty()) throw FormatError("library entry '" + label + "' has no spectra");
        for (const auto& s : spectra) lib.add(label, Spectrum(s.get<std::vector<double>>()));
    }
    return lib;
}

json to_json(const ReferenceLibrary& lib) {
    json j = json::object();
    for (const auto& [label, refs] : lib.entries()) {
        json arr = json::array();
        for (const auto& r : refs) arr.push_back(std::vector<double>(r.values().begin(), r.values().end()));
        j[label] = arr;
    }
    return j;
}

ReferenceLibrary read_library(const std::filesystem::path& path) { return library_from_json(read_json_file(path)); }

SpectralCube read_cube(const std::filesystem::path& header_path) {
    const json header = read_json_file(header_path);
    const int w = header.at("width").get<int>();
    const int h = header.at("height").get<int>();
    const int c = header.at("channels").get<int>();
    const std::string dtype = header.value("dtype", "float32");
    const std::string order = header.value("byte_order", "little");
    if (order != "little" && order != "big") throw FormatError("byte_order must be little or big");
    std::vector<double> bands = header.value("band_centers", std::vector<double>{});
    const std::size_t size = dtype_size(dtype);
    if (w <= 0 || h <= 0 || c <= 0) throw FormatError("cube dimensions must be positive");

    const auto bytes = read_file_bytes(data_path_for(header_path, header));
    const std::size_t n = static_cast<std::size_t>(w) * h * c;
    if (bytes.size() != n * size) {
        throw FormatError("cube data has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(n * size));
    }
    const bool swap = (order == "big") != (std::endian::native == std::endian::big);
    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* p = bytes.data() + i * size;
        if (dtype == "uint8") samples[i] = *p;
        else if (dtype == "uint16") samples[i] = load<std::uint16_t>(p, swap);
        else if (dtype == "float32") samples[i] = load<float>(p, swap);
        else samples[i] = load<double>(p, swap);
    }
    return SpectralCube(w, h, c, std::move(samples), std::move(bands));
}

void write_cube(const std::filesystem::path& header_path, const SpectralCube& cube, const std::string& dtype) {
    const std::size_t size = dtype_size(dtype);
    auto data_path = header_path;
    data_path.replace_extension(".raw");
    json header = {{"width", cube.width()},
                   {"height", cube.height()},
                   {"channels", cube.channels()},
                   {"dtype", dtype},
                   {"band_centers", cube.band_centers_nm()},
                   {"byte_order", std::endian::native == std::endian::big ? "big" : "little"},
                   {"data_file", data_path.filename().string()}};
    std::vector<std::uint8_t> bytes(cube.samples().size() * size);
    for (std::size_t i = 0; i < cube.samples().size(); ++i) {
        const double v = cube.samples()[i];
        auto* p = bytes.data() + i * size;
        if (dtype == "uint8") *p = static_cast<std::uint8_t>(v);
        else if (dtype == "uint16") { const auto x = static_cast<std::uint16_t>(v); std::memcpy(p, &x, 2); }
        else if (dtype == "float32") { const auto x = static_cast<float>(v); std::memcpy(p, &x, 4); }
        else std::memcpy(p, &v, 8);
    }
    write_file_atomic(data_path, bytes);
    write_file_atomic(header_path, header.dump(2));
}

json to_json(const LabelMap& map) {
    return {{"width", map.width},
            {"height", map.height},
            {"labels", map.labels},
            {"reject", LabelMap::kReject},
            {"indices", map.indices},
            {"angles", map.angles}};
}

}  // namespace clearing
