#pragma once

#include <string>
#include <vector>

#include "yatnn/matrix.hpp"
#include "yatnn/rng.hpp"

namespace yatnn {

struct Dataset {
    Matrix features;          // k x n, rows are samples
    std::vector<int> labels;  // class indices in [0, num_classes)
    int num_classes = 0;

    std::size_t size() const { return features.rows; }
};

// The four XOR points with labels 0,1,1,0.
Dataset xor_dataset();

// IDX container IO. Image files carry big-endian magic 0x00000803 and three
// dimension fields; label files carry 0x00000801 and one. Pixels are scaled
// by 1/255 on load.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes features (quantized by round(x*255)) and labels back to IDX files.
// `image_h`/`image_w` must multiply to the feature width.
void write_idx(const Dataset& ds, std::size_t image_h, std::size_t image_w,
               const std::string& images_path, const std::string& labels_path);

struct BlobOptions {
    double center_norm = 3.0;       // distance of class centers from origin
    bool near_duplicate_pair = false;  // classes 0 and 1 share almost one center
    double duplicate_offset = 0.05;
};

// Gaussian class blobs around deterministic, orthogonal-ish centers.
Dataset synthetic_blobs(int classes, int per_class, int dim, double spread,
                        RngState& rng, const BlobOptions& options = {});

// First `count` samples of a dataset (deterministic subset for desk runs).
Dataset take_prefix(const Dataset& ds, std::size_t count);

}  // namespace yatnn
