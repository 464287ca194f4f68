#include "fedvb/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace fedvb {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'B', 'N'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u8(std::ostream& out, std::uint8_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error("checkpoint: truncated file " + path);
    }
    return v;
}

std::uint8_t read_u8(std::istream& in, const std::string& path) {
    std::uint8_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error("checkpoint: truncated file " + path);
    }
    return v;
}

void read_doubles(std::istream& in, std::vector<double>& values,
                  const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() *
                                              sizeof(double)))) {
        throw std::runtime_error("checkpoint: truncated file " + path);
    }
}

}  // namespace

void save_checkpoint(const VbnnModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("checkpoint: cannot write " + path);
    }
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u8(out, model.mode == ModelMode::kVariational ? 1 : 0);
    write_u32(out, static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& layer : model.layers) {
        write_u32(out, static_cast<std::uint32_t>(layer.spec.in_dim));
        write_u32(out, static_cast<std::uint32_t>(layer.spec.out_dim));
        write_u8(out, layer.spec.activation == Activation::kRelu ? 1 : 0);
    }
    for (const auto& layer : model.layers) {
        write_doubles(out, layer.weights.mu);
        write_doubles(out, layer.weights.alpha);
        write_doubles(out, layer.biases.mu);
        write_doubles(out, layer.biases.alpha);
    }
    if (!out) {
        throw std::runtime_error("checkpoint: write failed for " + path);
    }
}

VbnnModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("checkpoint: cannot open " + path);
    }
    char magic[4];
    if (!in.read(magic, sizeof(magic)) ||
        std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = read_u32(in, path);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version in " + path);
    }
    VbnnModel model;
    model.mode = read_u8(in, path) == 1 ? ModelMode::kVariational
                                        : ModelMode::kDeterministic;
    const std::uint32_t layer_count = read_u32(in, path);
    model.layers.resize(layer_count);
    for (auto& layer : model.layers) {
        layer.spec.in_dim = read_u32(in, path);
        layer.spec.out_dim = read_u32(in, path);
        layer.spec.activation =
            read_u8(in, path) == 1 ? Activation::kRelu : Activation::kNone;
        if (layer.spec.in_dim == 0 || layer.spec.out_dim == 0) {
            throw std::runtime_error("checkpoint: zero layer dim in " + path);
        }
        layer.weights =
            GaussianParams::zeros({layer.spec.out_dim, layer.spec.in_dim});
        layer.biases = GaussianParams::zeros({layer.spec.out_dim});
    }
    for (auto& layer : model.layers) {
        read_doubles(in, layer.weights.mu, path);
        read_doubles(in, layer.weights.alpha, path);
        read_doubles(in, layer.biases.mu, path);
        read_doubles(in, layer.biases.alpha, path);
    }
    return model;
}

}  // namespace fedvb
