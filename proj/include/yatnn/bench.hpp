#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "yatnn/yat.hpp"

namespace yatnn {

struct FlopTally {
    std::uint64_t adds = 0, subs = 0, muls = 0, divs = 0, activations = 0;
    std::uint64_t total() const { return adds + subs + muls + divs + activations; }
};

// Scalar that reports every arithmetic op to a tally. The accounting
// convention: add/sub/mul/div are one FLOP each and an activation (ReLU)
// is one FLOP.
struct Counted {
    double v = 0.0;
    FlopTally* tally = nullptr;

    Counted operator+(const Counted& o) const {
        tally->adds += 1;
        return {v + o.v, tally};
    }
    Counted operator-(const Counted& o) const {
        tally->subs += 1;
        return {v - o.v, tally};
    }
    Counted operator*(const Counted& o) const {
        tally->muls += 1;
        return {v * o.v, tally};
    }
    Counted operator/(const Counted& o) const {
        tally->divs += 1;
        return {v / o.v, tally};
    }
    Counted relu() const {
        tally->activations += 1;
        return {v > 0.0 ? v : 0.0, tally};
    }
};

// Instrumented single-neuron evaluations. The traditional neuron counts the
// full dot + bias + ReLU chain (2d + 1). The yat neuron counts the two
// quadratic forms, squared dot and squared distance (5d - 1); the epsilon
// add and the final divide are excluded from the count, as is the per-layer
// scale, which is computed once per layer rather than per neuron.
FlopTally count_traditional_neuron(std::size_t d);
FlopTally count_yat_neuron(std::size_t d);

struct BenchRow {
    std::size_t d = 0;
    std::uint64_t counted_dot = 0;
    std::uint64_t counted_yat = 0;
    std::uint64_t model_dot = 0;
    std::uint64_t model_yat = 0;
    double model_ratio = 0.0;
    double throughput_dot = 0.0;  // neuron evaluations per second
    double throughput_yat = 0.0;
    double measured_ratio = 0.0;  // throughput_dot / throughput_yat
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string environment;
    std::string convention;
};

// Counted FLOPs plus timed throughput (median of `reps` after one warm-up)
// for each dimension. Counts are deterministic; throughput is host noise and
// is reported, never asserted.
BenchReport bench_kernels(const std::vector<std::size_t>& dims, int reps);

std::string bench_report_to_json(const BenchReport& report);
std::string bench_report_to_text(const BenchReport& report);

// Secondary per-product FLOP table: dot d, squared norm 3d, cosine 4d+1,
// yat 5d-1.
std::string per_product_flop_table(std::size_t d);

struct Fig6Row {
    std::array<double, 2> neuron{};
    double dot_value = 0.0;
    double yat_value = 0.0;
};

struct Fig6Table {
    std::array<double, 2> test_point{};
    std::vector<Fig6Row> rows;
    std::size_t dot_argmax = 0;
    std::size_t yat_argmax = 0;
};

// Dot vs yat rankings of the diagonal neuron set against the test point
// (6,6): the magnitude-blindness demonstration.
Fig6Table fig6_table(double epsilon = kDefaultEpsilon);

std::string fig6_to_csv(const Fig6Table& table);
std::string fig6_to_text(const Fig6Table& table);

}  // namespace yatnn
