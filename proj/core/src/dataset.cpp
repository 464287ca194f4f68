#include "fedvb/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>

#include "fedvb/rng.hpp"

namespace fedvb {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw std::runtime_error("idx: truncated header in " + path);
    }
    return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
           (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t n,
                                        const std::string& path) {
    std::vector<unsigned char> data(n);
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(n))) {
        throw std::runtime_error("idx: truncated payload in " + path);
    }
    return data;
}

}  // namespace

void Dataset::gather(const std::vector<std::size_t>& indices,
                     std::vector<double>& inputs_out,
                     std::vector<int>& labels_out) const {
    inputs_out.resize(indices.size() * dim);
    labels_out.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(src * dim),
                    dim,
                    inputs_out.begin() + static_cast<std::ptrdiff_t>(r * dim));
        labels_out[r] = labels[src];
    }
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) {
        throw std::runtime_error("idx: cannot open " + images_path);
    }
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) {
        throw std::runtime_error("idx: cannot open " + labels_path);
    }

    const std::uint32_t imagic = read_be32(images, images_path);
    if (imagic != kImagesMagic) {
        throw std::runtime_error("idx: bad image magic in " + images_path);
    }
    const std::uint32_t icount = read_be32(images, images_path);
    const std::uint32_t rows = read_be32(images, images_path);
    const std::uint32_t cols = read_be32(images, images_path);

    const std::uint32_t lmagic = read_be32(labels, labels_path);
    if (lmagic != kLabelsMagic) {
        throw std::runtime_error("idx: bad label magic in " + labels_path);
    }
    const std::uint32_t lcount = read_be32(labels, labels_path);
    if (icount != lcount) {
        throw std::runtime_error("idx: image/label count mismatch between " +
                                 images_path + " and " + labels_path);
    }

    Dataset ds;
    ds.count = icount;
    ds.dim = static_cast<std::size_t>(rows) * cols;
    const auto pixels = read_payload(images, ds.count * ds.dim, images_path);
    const auto raw_labels = read_payload(labels, ds.count, labels_path);

    ds.inputs.resize(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        ds.inputs[i] = static_cast<double>(pixels[i]) / 255.0;
    }
    ds.labels.resize(raw_labels.size());
    int max_label = 0;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        ds.labels[i] = static_cast<int>(raw_labels[i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = static_cast<std::size_t>(max_label) + 1;
    return ds;
}

Dataset generate_synthetic(std::size_t classes, std::size_t dims,
                           std::size_t samples_per_class, double spread,
                           std::uint64_t seed) {
    if (classes < 2) {
        throw std::invalid_argument("synthetic: classes must be >= 2");
    }
    if (dims < classes) {
        throw std::invalid_argument(
            "synthetic: dims must be >= classes so class means are distinct");
    }
    if (samples_per_class == 0) {
        throw std::invalid_argument("synthetic: samples_per_class must be >= 1");
    }
    if (spread < 0.0) {
        throw std::invalid_argument("synthetic: spread must be >= 0");
    }

    Dataset ds;
    ds.count = classes * samples_per_class;
    ds.dim = dims;
    ds.num_classes = classes;
    ds.inputs.assign(ds.count * dims, 0.0);
    ds.labels.resize(ds.count);

    std::mt19937_64 engine = make_engine(seed);
    std::normal_distribution<double> unit;
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < samples_per_class; ++s, ++row) {
            double* x = ds.inputs.data() + row * dims;
            for (std::size_t d = 0; d < dims; ++d) {
                x[d] = spread * unit(engine);
            }
            x[c] += 1.0;
            ds.labels[row] = static_cast<int>(c);
        }
    }
    return ds;
}

}  // namespace fedvb
