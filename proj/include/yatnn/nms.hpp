#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "yatnn/matrix.hpp"
#include "yatnn/yat.hpp"

namespace yatnn {

struct CollapsePair {
    std::size_t i = 0, j = 0;
    double similarity = 0.0;
};

// Weight-space state of one layer: 2-D projection of the neuron rows, kernel
// density over the projection, pairwise yat similarity, and the pairs whose
// similarity stands far above the rest (collapse candidates).
struct NMSReport {
    std::string layer_name;
    Matrix points;  // m x 2
    std::array<double, 2> variance_explained{0.0, 0.0};
    bool external_projection = false;
    Matrix density_grid;  // grid x grid, Gaussian KDE with Scott bandwidth
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;  // grid bounds, 10% padded
    Matrix similarity;  // m x m pairwise yat
    std::vector<CollapsePair> collapse_pairs;
    double kappa = 10.0;
    double median_offdiag = 0.0;
    double epsilon = kDefaultEpsilon;
};

NMSReport build_nms(const Matrix& kernel, double epsilon = kDefaultEpsilon,
                    double kappa = 10.0, std::size_t grid = 64,
                    const std::string& layer_name = "layer");

// Same report but with an externally supplied 2-D embedding instead of the
// built-in PCA projection.
NMSReport build_nms_with_points(const Matrix& kernel, const Matrix& points,
                                double epsilon = kDefaultEpsilon, double kappa = 10.0,
                                std::size_t grid = 64,
                                const std::string& layer_name = "layer");

enum class NmsFormat { Csv, Json, Svg };

// Writes the report under `dir` with fixed file names (points.csv,
// similarity.csv, collapse.csv, nms.json, nms.svg); returns the paths written.
std::vector<std::string> export_nms(const NMSReport& report, const std::string& dir,
                                    const std::set<NmsFormat>& formats);

std::string nms_to_json(const NMSReport& report);
NMSReport nms_from_json(const std::string& text);
std::string nms_to_svg(const NMSReport& report);

}  // namespace yatnn
