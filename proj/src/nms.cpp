#include "yatnn/nms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "yatnn/errors.hpp"
#include "yatnn/pca.hpp"

namespace yatnn {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void fill_density(NMSReport& r, std::size_t grid) {
    const std::size_t m = r.points.rows;
    double x_lo = r.points(0, 0), x_hi = x_lo, y_lo = r.points(0, 1), y_hi = y_lo;
    for (std::size_t i = 0; i < m; ++i) {
        x_lo = std::min(x_lo, r.points(i, 0));
        x_hi = std::max(x_hi, r.points(i, 0));
        y_lo = std::min(y_lo, r.points(i, 1));
        y_hi = std::max(y_hi, r.points(i, 1));
    }
    const double x_pad = (x_hi > x_lo) ? 0.1 * (x_hi - x_lo) : 0.5;
    const double y_pad = (y_hi > y_lo) ? 0.1 * (y_hi - y_lo) : 0.5;
    r.x_min = x_lo - x_pad;
    r.x_max = x_hi + x_pad;
    r.y_min = y_lo - y_pad;
    r.y_max = y_hi + y_pad;

    // Scott's rule for 2-D data: h_i = sigma_i * m^(-1/6).
    double mean_x = 0, mean_y = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mean_x += r.points(i, 0);
        mean_y += r.points(i, 1);
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);
    double var_x = 0, var_y = 0;
    for (std::size_t i = 0; i < m; ++i) {
        var_x += (r.points(i, 0) - mean_x) * (r.points(i, 0) - mean_x);
        var_y += (r.points(i, 1) - mean_y) * (r.points(i, 1) - mean_y);
    }
    const double ddof = m > 1 ? static_cast<double>(m - 1) : 1.0;
    const double factor = std::pow(static_cast<double>(m), -1.0 / 6.0);
    const double hx = std::max(std::sqrt(var_x / ddof), 1e-9) * factor;
    const double hy = std::max(std::sqrt(var_y / ddof), 1e-9) * factor;

    r.density_grid = Matrix(grid, grid);
    const double norm = 1.0 / (static_cast<double>(m) * 2.0 * std::numbers::pi * hx * hy);
    for (std::size_t gy = 0; gy < grid; ++gy) {
        const double y = r.y_min + (r.y_max - r.y_min) * static_cast<double>(gy) /
                                       static_cast<double>(grid - 1);
        for (std::size_t gx = 0; gx < grid; ++gx) {
            const double x = r.x_min + (r.x_max - r.x_min) * static_cast<double>(gx) /
                                           static_cast<double>(grid - 1);
            double density = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double dx = (x - r.points(i, 0)) / hx;
                const double dy = (y - r.points(i, 1)) / hy;
                density += std::exp(-0.5 * (dx * dx + dy * dy));
            }
            r.density_grid(gy, gx) = norm * density;
        }
    }
}

void fill_similarity_and_collapse(NMSReport& r, const Matrix& kernel) {
    r.similarity = pairwise_yat_matrix(kernel, r.epsilon);
    const std::size_t m = kernel.rows;
    std::vector<double> offdiag;
    offdiag.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) offdiag.push_back(r.similarity(i, j));
    }
    r.median_offdiag = median_of(offdiag);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (r.similarity(i, j) > r.kappa * r.median_offdiag) {
                r.collapse_pairs.push_back({i, j, r.similarity(i, j)});
            }
        }
    }
}

}  // namespace

NMSReport build_nms(const Matrix& kernel, double epsilon, double kappa,
                    std::size_t grid, const std::string& layer_name) {
    if (kernel.rows < 2) throw DomainError("build_nms: need at least 2 neurons");
    if (grid < 2) throw DomainError("build_nms: grid must be >= 2");
    NMSReport r;
    r.layer_name = layer_name;
    r.kappa = kappa;
    r.epsilon = epsilon;
    Pca2d pca = pca_2d(kernel);
    r.points = std::move(pca.points);
    r.variance_explained = pca.variance_explained;
    fill_density(r, grid);
    fill_similarity_and_collapse(r, kernel);
    return r;
}

NMSReport build_nms_with_points(const Matrix& kernel, const Matrix& points,
                                double epsilon, double kappa, std::size_t grid,
                                const std::string& layer_name) {
    if (kernel.rows < 2) throw DomainError("build_nms: need at least 2 neurons");
    if (points.rows != kernel.rows || points.cols != 2) {
        throw ShapeError("build_nms: external points must be m x 2");
    }
    NMSReport r;
    r.layer_name = layer_name;
    r.kappa = kappa;
    r.epsilon = epsilon;
    r.points = points;
    r.external_projection = true;
    fill_density(r, grid);
    fill_similarity_and_collapse(r, kernel);
    return r;
}

std::string nms_to_json(const NMSReport& r) {
    nlohmann::json j;
    j["layer_name"] = r.layer_name;
    j["points"] = {{"rows", r.points.rows}, {"cols", r.points.cols},
                   {"data", r.points.data}};
    j["variance_explained"] = r.variance_explained;
    j["external_projection"] = r.external_projection;
    j["density_grid"] = {{"rows", r.density_grid.rows},
                         {"cols", r.density_grid.cols},
                         {"data", r.density_grid.data}};
    j["bounds"] = {{"x_min", r.x_min}, {"x_max", r.x_max}, {"y_min", r.y_min},
                   {"y_max", r.y_max}};
    j["similarity"] = {{"rows", r.similarity.rows}, {"cols", r.similarity.cols},
                       {"data", r.similarity.data}};
    j["collapse_pairs"] = nlohmann::json::array();
    for (const auto& p : r.collapse_pairs) {
        j["collapse_pairs"].push_back({{"i", p.i}, {"j", p.j},
                                       {"similarity", p.similarity}});
    }
    j["kappa"] = r.kappa;
    j["median_offdiag"] = r.median_offdiag;
    j["epsilon"] = r.epsilon;
    return j.dump(2);
}

namespace {

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) {
        throw FormatError("matrix payload size does not match shape");
    }
    return m;
}

}  // namespace

NMSReport nms_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    NMSReport r;
    r.layer_name = j.at("layer_name").get<std::string>();
    r.points = matrix_from_json(j.at("points"));
    r.variance_explained = j.at("variance_explained").get<std::array<double, 2>>();
    r.external_projection = j.at("external_projection").get<bool>();
    r.density_grid = matrix_from_json(j.at("density_grid"));
    r.x_min = j.at("bounds").at("x_min").get<double>();
    r.x_max = j.at("bounds").at("x_max").get<double>();
    r.y_min = j.at("bounds").at("y_min").get<double>();
    r.y_max = j.at("bounds").at("y_max").get<double>();
    r.similarity = matrix_from_json(j.at("similarity"));
    for (const auto& p : j.at("collapse_pairs")) {
        r.collapse_pairs.push_back({p.at("i").get<std::size_t>(),
                                    p.at("j").get<std::size_t>(),
                                    p.at("similarity").get<double>()});
    }
    r.kappa = j.at("kappa").get<double>();
    r.median_offdiag = j.at("median_offdiag").get<double>();
    r.epsilon = j.at("epsilon").get<double>();
    return r;
}

std::string nms_to_svg(const NMSReport& r) {
    // Left panel: scatter with flagged pairs linked. Right panel: similarity
    // heatmap on a monochrome log ramp.
    constexpr double panel = 360.0;
    constexpr double margin = 30.0;
    const double total_w = 2 * panel + 3 * margin;
    const double total_h = panel + 2 * margin;

    auto sx = [&](double x) {
        return margin + panel * (x - r.x_min) / (r.x_max - r.x_min);
    };
    auto sy = [&](double y) {
        return margin + panel * (1.0 - (y - r.y_min) / (r.y_max - r.y_min));
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(total_w) +
           "\" height=\"" + fmt(total_h) + "\">\n";
    svg += "<text x=\"" + fmt(margin) + "\" y=\"" + fmt(margin - 10) +
           "\" font-size=\"12\">" + r.layer_name + " weight projection</text>\n";

    for (const auto& p : r.collapse_pairs) {
        svg += "<line class=\"collapse-link\" x1=\"" + fmt(sx(r.points(p.i, 0))) +
               "\" y1=\"" + fmt(sy(r.points(p.i, 1))) + "\" x2=\"" +
               fmt(sx(r.points(p.j, 0))) + "\" y2=\"" + fmt(sy(r.points(p.j, 1))) +
               "\" stroke=\"#c00000\" stroke-width=\"1.5\"/>\n";
    }
    for (std::size_t i = 0; i < r.points.rows; ++i) {
        svg += "<circle class=\"pt\" cx=\"" + fmt(sx(r.points(i, 0))) + "\" cy=\"" +
               fmt(sy(r.points(i, 1))) + "\" r=\"3\" fill=\"#202020\"/>\n";
    }

    // Heatmap.
    const std::size_t m = r.similarity.rows;
    double vmax = 0.0;
    for (double v : r.similarity.data) vmax = std::max(vmax, v);
    const double cell = panel / static_cast<double>(m);
    const double hx0 = 2 * margin + panel;
    svg += "<text x=\"" + fmt(hx0) + "\" y=\"" + fmt(margin - 10) +
           "\" font-size=\"12\">pairwise similarity (log ramp)</text>\n";
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double v = r.similarity(i, j);
            const double level =
                vmax > 0.0 ? std::log1p(v) / std::log1p(vmax) : 0.0;
            const int shade = 255 - static_cast<int>(std::lround(level * 255.0));
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", shade, shade, shade);
            svg += "<rect class=\"cell\" x=\"" + fmt(hx0 + cell * double(j)) +
                   "\" y=\"" + fmt(margin + cell * double(i)) + "\" width=\"" +
                   fmt(cell) + "\" height=\"" + fmt(cell) + "\" fill=\"" + color +
                   "\"/>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::string> export_nms(const NMSReport& r, const std::string& dir,
                                    const std::set<NmsFormat>& formats) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw IoError("export_nms: cannot create directory " + dir);
    }
    auto write_file = [&](const std::string& name, const std::string& contents) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("export_nms: cannot open " + path);
        out << contents;
        if (!out) throw IoError("export_nms: failed writing " + path);
        return path;
    };

    std::vector<std::string> written;
    if (formats.contains(NmsFormat::Csv)) {
        std::string points = "index,x,y\n";
        for (std::size_t i = 0; i < r.points.rows; ++i) {
            points += std::to_string(i) + "," + fmt(r.points(i, 0)) + "," +
                      fmt(r.points(i, 1)) + "\n";
        }
        written.push_back(write_file("points.csv", points));

        std::string sim;
        for (std::size_t i = 0; i < r.similarity.rows; ++i) {
            for (std::size_t j = 0; j < r.similarity.cols; ++j) {
                sim += fmt(r.similarity(i, j));
                sim += (j + 1 == r.similarity.cols) ? '\n' : ',';
            }
        }
        written.push_back(write_file("similarity.csv", sim));

        std::string collapse = "i,j,similarity\n";
        for (const auto& p : r.collapse_pairs) {
            collapse += std::to_string(p.i) + "," + std::to_string(p.j) + "," +
                        fmt(p.similarity) + "\n";
        }
        written.push_back(write_file("collapse.csv", collapse));
    }
    if (formats.contains(NmsFormat::Json)) {
        written.push_back(write_file("nms.json", nms_to_json(r)));
    }
    if (formats.contains(NmsFormat::Svg)) {
        written.push_back(write_file("nms.svg", nms_to_svg(r)));
    }
    return written;
}

}  // namespace yatnn
