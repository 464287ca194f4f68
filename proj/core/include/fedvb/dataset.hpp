#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedvb/vbnn.hpp"

namespace fedvb {

/// Flattened supervised dataset: row-major inputs, one integer label per row.
struct Dataset {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> inputs;
    std::vector<int> labels;

    BatchView view() const {
        return BatchView{inputs, labels, count, dim};
    }
    /// View over a subset of rows, materialized into the given buffers.
    void gather(const std::vector<std::size_t>& indices,
                std::vector<double>& inputs_out,
                std::vector<int>& labels_out) const;
};

/// Reads an IDX image/label file pair (big-endian magics 0x00000803 and
/// 0x00000801). Pixels are normalized to [0,1] as byte/255.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

/// Gaussian blobs: class c is centered on the c-th unit basis vector, with
/// isotropic stddev `spread`. Requires dims >= classes so the means stay
/// distinct. Sample order is class-major and fully seed-deterministic.
Dataset generate_synthetic(std::size_t classes, std::size_t dims,
                           std::size_t samples_per_class, double spread,
                           std::uint64_t seed);

}  // namespace fedvb
