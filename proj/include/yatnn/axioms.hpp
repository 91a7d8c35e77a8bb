#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "yatnn/rng.hpp"
#include "yatnn/yat.hpp"

namespace yatnn {

enum class Measure { E, Ebar };

enum class Axiom {
    NonNegativity,
    Symmetry,
    IdentityForward,  // d(x, x) = 0
    IdentityReverse,  // d(x, y) = 0 implies x = y
    Triangle,
};

const char* axiom_name(Axiom a);
const char* measure_name(Measure m);

struct AxiomCounterexample {
    Axiom axiom;
    std::vector<std::vector<double>> vectors;  // the pair or triple involved
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AxiomViolationCounts {
    std::uint64_t non_negativity = 0;
    std::uint64_t symmetry = 0;
    std::uint64_t identity_forward = 0;
    std::uint64_t identity_reverse = 0;
    std::uint64_t triangle = 0;
};

struct AxiomReport {
    Measure measure = Measure::E;
    std::uint64_t samples = 0;
    std::size_t dim = 0;
    double epsilon = kDefaultEpsilon;
    AxiomViolationCounts violations;
    std::vector<AxiomCounterexample> counterexamples;  // capped at 10
};

using VectorTriple = std::array<std::vector<double>, 3>;

// Empirically tallies metric-axiom violations of the chosen measure over
// `samples` random standard-normal triples plus the supplied seeded cases
// (always evaluated first so their counterexamples are retained).
// Violations use the relative rule lhs > rhs + 1e-9 * max(1, rhs).
AxiomReport axiom_check(Measure measure, std::uint64_t samples, std::size_t dim,
                        RngState& rng, const std::vector<VectorTriple>& seeded_cases,
                        double epsilon = kDefaultEpsilon);

// The stock triple that exhibits a triangle violation for the E measure:
// (1,0,0), (0,0,1), (1,0.1,0), padded or truncated to `dim`.
VectorTriple canonical_triangle_triple(std::size_t dim);

std::string axiom_report_to_json(const AxiomReport& report);
AxiomReport axiom_report_from_json(const std::string& text);

// Re-evaluates a stored counterexample; true when it still violates.
bool reevaluate_counterexample(const AxiomCounterexample& ce, Measure measure,
                               double epsilon);

}  // namespace yatnn
