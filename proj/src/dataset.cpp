#include "yatnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "yatnn/errors.hpp"

namespace yatnn {

Dataset xor_dataset() {
    Dataset ds;
    ds.features = Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    ds.labels = {0, 1, 1, 0};
    ds.num_classes = 2;
    return ds;
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw IoError("truncated IDX header in " + path);
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t count,
                                        const std::string& path) {
    std::vector<unsigned char> bytes(count);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count))) {
        throw IoError("truncated IDX payload in " + path);
    }
    return bytes;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open " + images_path);
    if (const auto magic = read_be32(img, images_path); magic != kImagesMagic) {
        throw FormatError("bad IDX image magic in " + images_path);
    }
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t h = read_be32(img, images_path);
    const std::uint32_t w = read_be32(img, images_path);
    const auto pixels = read_payload(img, std::size_t(count) * h * w, images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels_path);
    if (const auto magic = read_be32(lab, labels_path); magic != kLabelsMagic) {
        throw FormatError("bad IDX label magic in " + labels_path);
    }
    const std::uint32_t label_count = read_be32(lab, labels_path);
    if (label_count != count) {
        throw ConsistencyError("IDX image count " + std::to_string(count) +
                               " does not match label count " + std::to_string(label_count));
    }
    const auto raw_labels = read_payload(lab, label_count, labels_path);

    Dataset ds;
    ds.features = Matrix(count, std::size_t(h) * w);
    for (std::size_t i = 0; i < ds.features.size(); ++i) {
        ds.features.data[i] = pixels[i] / 255.0;
    }
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    int max_label = 0;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    ds.num_classes = max_label + 1;
    return ds;
}

void write_idx(const Dataset& ds, std::size_t image_h, std::size_t image_w,
               const std::string& images_path, const std::string& labels_path) {
    if (image_h * image_w != ds.features.cols) {
        throw ShapeError("write_idx: image dims do not match feature width");
    }
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open " + images_path + " for writing");
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, static_cast<std::uint32_t>(image_h));
    write_be32(img, static_cast<std::uint32_t>(image_w));
    for (double v : ds.features.data) {
        const double q = std::clamp(std::round(v * 255.0), 0.0, 255.0);
        const unsigned char byte = static_cast<unsigned char>(q);
        img.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!img) throw IoError("failed writing " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels_path + " for writing");
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (int l : ds.labels) {
        const unsigned char byte = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!lab) throw IoError("failed writing " + labels_path);
}

Dataset synthetic_blobs(int classes, int per_class, int dim, double spread,
                        RngState& rng, const BlobOptions& options) {
    if (classes < 2) throw DomainError("synthetic_blobs: need at least 2 classes");
    if (per_class < 1 || dim < 1) {
        throw DomainError("synthetic_blobs: per_class and dim must be >= 1");
    }

    // Deterministic centers: cycle through coordinate axes, growing the
    // magnitude and alternating sign each time an axis repeats.
    Matrix centers(classes, dim);
    for (int c = 0; c < classes; ++c) {
        const int axis = c % dim;
        const int round = c / dim;
        const double sign = (round % 2 == 0) ? 1.0 : -1.0;
        centers(c, axis) = sign * options.center_norm * (1.0 + 0.5 * round);
    }
    if (options.near_duplicate_pair && classes >= 2) {
        for (int j = 0; j < dim; ++j) centers(1, j) = centers(0, j);
        centers(1, (0 + 1) % dim) += options.duplicate_offset;
    }

    Dataset ds;
    ds.features = Matrix(std::size_t(classes) * per_class, dim);
    ds.labels.resize(ds.features.rows);
    ds.num_classes = classes;
    std::size_t row = 0;
    for (int c = 0; c < classes; ++c) {
        for (int s = 0; s < per_class; ++s, ++row) {
            for (int j = 0; j < dim; ++j) {
                ds.features(row, j) = centers(c, j) + spread * next_normal(rng);
            }
            ds.labels[row] = c;
        }
    }
    return ds;
}

Dataset take_prefix(const Dataset& ds, std::size_t count) {
    count = std::min(count, ds.size());
    Dataset out;
    out.features = Matrix(count, ds.features.cols);
    std::copy_n(ds.features.data.begin(), count * ds.features.cols,
                out.features.data.begin());
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<long>(count));
    out.num_classes = ds.num_classes;
    return out;
}

}  // namespace yatnn
