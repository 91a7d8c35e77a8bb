#include "yatnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "yatnn/errors.hpp"
#include "yatnn/matrix.hpp"

namespace yatnn {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<Counted> counted_vector(std::size_t d, FlopTally* tally, double fill) {
    std::vector<Counted> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = {fill + 0.001 * double(i), tally};
    return v;
}

}  // namespace

FlopTally count_traditional_neuron(std::size_t d) {
    if (d == 0) throw DomainError("count_traditional_neuron: d must be >= 1");
    FlopTally tally;
    auto w = counted_vector(d, &tally, 0.5);
    auto x = counted_vector(d, &tally, 1.0);
    Counted b{0.1, &tally};

    Counted acc = w[0] * x[0];
    for (std::size_t i = 1; i < d; ++i) acc = acc + w[i] * x[i];
    acc = acc + b;
    acc = acc.relu();
    return tally;
}

FlopTally count_yat_neuron(std::size_t d) {
    if (d == 0) throw DomainError("count_yat_neuron: d must be >= 1");
    FlopTally tally;
    auto w = counted_vector(d, &tally, 0.5);
    auto x = counted_vector(d, &tally, 1.0);

    Counted s = w[0] * x[0];
    for (std::size_t i = 1; i < d; ++i) s = s + w[i] * x[i];
    Counted numerator = s * s;

    Counted diff0 = x[0] - w[0];
    Counted dist = diff0 * diff0;
    for (std::size_t i = 1; i < d; ++i) {
        Counted diff = x[i] - w[i];
        dist = dist + diff * diff;
    }
    // The stabilizing epsilon add and the final divide fall outside the
    // counted region.
    [[maybe_unused]] const double y = numerator.v / (1e-6 + dist.v);
    return tally;
}

namespace {

// Plain-double kernels for the timing side.
double timed_dot_neuron(const double* w, const double* x, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += w[i] * x[i];
    s += 0.1;
    return s > 0.0 ? s : 0.0;
}

double timed_yat_neuron(const double* w, const double* x, std::size_t d) {
    double s = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        s += w[i] * x[i];
        const double diff = x[i] - w[i];
        dist += diff * diff;
    }
    return s * s / (1e-6 + dist);
}

template <typename Kernel>
double median_throughput(Kernel&& kernel, std::size_t d, int reps) {
    constexpr std::size_t kBatch = 2048;
    std::vector<double> w(d), x(kBatch * d);
    for (std::size_t i = 0; i < d; ++i) w[i] = 0.25 + 1e-3 * double(i % 97);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 + 1e-4 * double(i % 1009);

    volatile double sink = 0.0;
    std::vector<double> times;
    for (int rep = 0; rep <= reps; ++rep) {  // first pass is warm-up
        const auto t0 = std::chrono::steady_clock::now();
        double acc = 0.0;
        for (std::size_t b = 0; b < kBatch; ++b) {
            acc += kernel(w.data(), x.data() + b * d, d);
        }
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink + acc;
        if (rep > 0) {
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
    }
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    return median > 0.0 ? static_cast<double>(kBatch) / median : 0.0;
}

}  // namespace

BenchReport bench_kernels(const std::vector<std::size_t>& dims, int reps) {
    if (dims.empty()) throw DomainError("bench_kernels: dims must be non-empty");
    if (reps < 1) throw DomainError("bench_kernels: reps must be >= 1");
    BenchReport report;
    report.environment = "single-threaded scalar kernels, 64-bit floats";
    report.convention =
        "1 FLOP per scalar add/sub/mul/div; ReLU counts 1; the yat count covers "
        "the squared dot and squared distance only (the epsilon add, the final "
        "divide, and the once-per-layer scale are excluded)";
    for (std::size_t d : dims) {
        BenchRow row;
        row.d = d;
        row.counted_dot = count_traditional_neuron(d).total();
        row.counted_yat = count_yat_neuron(d).total();
        const FlopCounts model = flop_model(d);
        row.model_dot = model.traditional;
        row.model_yat = model.yat;
        row.model_ratio = model.ratio;
        row.throughput_dot = median_throughput(timed_dot_neuron, d, reps);
        row.throughput_yat = median_throughput(timed_yat_neuron, d, reps);
        row.measured_ratio = row.throughput_yat > 0.0
                                 ? row.throughput_dot / row.throughput_yat
                                 : 0.0;
        report.rows.push_back(row);
    }
    return report;
}

std::string bench_report_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["environment"] = report.environment;
    j["convention"] = report.convention;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back({{"d", r.d},
                             {"counted_flops_dot_neuron", r.counted_dot},
                             {"counted_flops_yat_neuron", r.counted_yat},
                             {"model_flops_dot_neuron", r.model_dot},
                             {"model_flops_yat_neuron", r.model_yat},
                             {"model_ratio", r.model_ratio},
                             {"throughput_dot", r.throughput_dot},
                             {"throughput_yat", r.throughput_yat},
                             {"measured_ratio", r.measured_ratio}});
    }
    return j.dump(2);
}

std::string bench_report_to_text(const BenchReport& report) {
    std::string out;
    out += "# " + report.convention + "\n";
    out += "# environment: " + report.environment + "\n";
    out += "d,counted_dot,counted_yat,model_dot,model_yat,model_ratio,"
           "throughput_dot,throughput_yat,measured_ratio\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.d) + "," + std::to_string(r.counted_dot) + "," +
               std::to_string(r.counted_yat) + "," + std::to_string(r.model_dot) + "," +
               std::to_string(r.model_yat) + "," + fmt(r.model_ratio) + "," +
               fmt(r.throughput_dot) + "," + fmt(r.throughput_yat) + "," +
               fmt(r.measured_ratio) + "\n";
    }
    return out;
}

std::string per_product_flop_table(std::size_t d) {
    std::string out = "product,flops\n";
    out += "dot," + std::to_string(d) + "\n";
    out += "squared_norm," + std::to_string(3 * d) + "\n";
    out += "cosine," + std::to_string(4 * d + 1) + "\n";
    out += "yat," + std::to_string(5 * d - 1) + "\n";
    return out;
}

Fig6Table fig6_table(double epsilon) {
    Fig6Table table;
    table.test_point = {6.0, 6.0};
    const std::vector<std::array<double, 2>> neurons = {
        {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {8, 8}, {9, 9}};
    for (const auto& n : neurons) {
        Fig6Row row;
        row.neuron = n;
        row.dot_value = dot(table.test_point, n);
        row.yat_value = yat_product(table.test_point, n, epsilon);
        table.rows.push_back(row);
    }
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        if (table.rows[i].dot_value > table.rows[table.dot_argmax].dot_value) {
            table.dot_argmax = i;
        }
        if (table.rows[i].yat_value > table.rows[table.yat_argmax].yat_value) {
            table.yat_argmax = i;
        }
    }
    return table;
}

std::string fig6_to_csv(const Fig6Table& table) {
    std::string out = "neuron_x,neuron_y,dot,yat\n";
    char buf[128];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", r.neuron[0],
                      r.neuron[1], r.dot_value, r.yat_value);
        out += buf;
    }
    return out;
}

std::string fig6_to_text(const Fig6Table& table) {
    std::string out = "similarity to test point (6, 6)\n";
    out += "neuron      dot        yat\n";
    char buf[128];
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        std::snprintf(buf, sizeof(buf), "(%g, %g)   %-9.4g  %-12.6g%s%s\n", r.neuron[0],
                      r.neuron[1], r.dot_value, r.yat_value,
                      i == table.dot_argmax ? "  <- dot argmax" : "",
                      i == table.yat_argmax ? "  <- yat argmax" : "");
        out += buf;
    }
    return out;
}

}  // namespace yatnn
