#include "ptmark/harness/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ptmark/errors.hpp"

namespace ptmark {

namespace {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

constexpr char kMagic[4] = {'P', 'T', 'T', '1'};

void write_tensor(const std::filesystem::path& path, const std::vector<std::uint64_t>& dims,
                  const std::vector<double>& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    const auto rank = static_cast<std::uint32_t>(dims.size());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&rank), sizeof rank);
    out.write(reinterpret_cast<const char*>(dims.data()), static_cast<std::streamsize>(dims.size() * 8));
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 8));
}

std::vector<double> read_tensor(const std::filesystem::path& path, std::vector<std::uint64_t>& dims,
                                std::uint32_t expected_rank) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    char magic[4];
    std::uint32_t rank = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rank), sizeof rank);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError(path.string() + ": not a tensor file");
    if (rank != expected_rank)
        throw ShapeError(path.string() + ": rank " + std::to_string(rank) + ", expected " +
                         std::to_string(expected_rank));
    dims.assign(rank, 0);
    in.read(reinterpret_cast<char*>(dims.data()), static_cast<std::streamsize>(rank * 8));
    std::uint64_t count = 1;
    for (auto d : dims) {
        if (d == 0 || d > (1u << 20)) throw ShapeError(path.string() + ": implausible dimension");
        count *= d;
    }
    std::vector<double> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * 8));
    if (!in) throw ConfigError(path.string() + ": truncated tensor data");
    return data;
}

}  // namespace

void save_latent(const std::filesystem::path& path, const Latent& z) {
    write_tensor(path, {z.channels, z.height, z.width}, z.data);
}

Latent load_latent(const std::filesystem::path& path) {
    std::vector<std::uint64_t> dims;
    auto data = read_tensor(path, dims, 3);
    Latent z(dims[0], dims[1], dims[2]);
    z.data = std::move(data);
    return z;
}

void save_image(const std::filesystem::path& path, const Image& x) { write_tensor(path, {x.height, x.width}, x.data); }

Image load_image(const std::filesystem::path& path) {
    std::vector<std::uint64_t> dims;
    auto data = read_tensor(path, dims, 2);
    Image x(dims[0], dims[1]);
    x.data = std::move(data);
    return x;
}

void write_pgm(const std::filesystem::path& path, const Image& x) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "P5\n" << x.width << ' ' << x.height << "\n255\n";
    for (double v : x.data) out.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    auto token = [&] {
        std::string t;
        while (in >> t && t.front() == '#') std::getline(in, t);
        return t;
    };
    if (token() != "P5") throw ConfigError(path.string() + ": only binary PGM (P5) is supported");
    std::size_t w = 0, h = 0;
    long maxval = 0;
    try {
        w = std::stoul(token());
        h = std::stoul(token());
        maxval = std::stol(token());
    } catch (const std::exception&) {
        throw ConfigError(path.string() + ": malformed PGM header");
    }
    if (w == 0 || h == 0 || maxval <= 0 || maxval > 65535) throw ConfigError(path.string() + ": bad PGM header");
    in.get();
    Image x(h, w);
    for (double& v : x.data) {
        long raw = in.get();
        if (maxval > 255) raw = (raw << 8) | in.get();
        if (!in) throw ConfigError(path.string() + ": truncated PGM data");
        v = static_cast<double>(raw) / static_cast<double>(maxval);
    }
    return x;
}

Image read_any_image(const std::filesystem::path& path) {
    return path.extension() == ".pgm" ? read_pgm(path) : load_image(path);
}

}  // namespace ptmark
