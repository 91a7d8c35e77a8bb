#include "yatnn/axioms.hpp"

#include <cmath>

#include "json.hpp"
#include "yatnn/errors.hpp"

namespace yatnn {

namespace {

constexpr double kRelTol = 1e-9;
constexpr std::size_t kMaxCounterexamples = 10;

// The violation rule for an axiom stated as lhs <= rhs.
bool violates(double lhs, double rhs) {
    return lhs > rhs + kRelTol * std::max(1.0, rhs);
}

double measure_value(Measure m, std::span<const double> a, std::span<const double> b,
                     double epsilon) {
    return m == Measure::E ? yat_product(a, b, epsilon) : posi_yat_product(a, b, epsilon);
}

struct Tally {
    AxiomReport* report;

    void record(Axiom axiom, std::uint64_t& counter,
                const std::vector<std::vector<double>>& vectors, double lhs, double rhs) {
        counter += 1;
        if (report->counterexamples.size() < kMaxCounterexamples) {
            report->counterexamples.push_back({axiom, vectors, lhs, rhs});
        }
    }
};

void evaluate_triple(const VectorTriple& t, Measure measure, double epsilon,
                     AxiomReport& report, Tally& tally) {
    const auto& x = t[0];
    const auto& y = t[1];
    const auto& z = t[2];
    auto& v = report.violations;

    const double dxy = measure_value(measure, x, y, epsilon);
    const double dyx = measure_value(measure, y, x, epsilon);
    const double dxx = measure_value(measure, x, x, epsilon);

    // Non-negativity: 0 <= d(x, y).
    if (violates(0.0, dxy)) {
        tally.record(Axiom::NonNegativity, v.non_negativity, {x, y}, 0.0, dxy);
    }
    // Symmetry, both directions.
    if (violates(dxy, dyx) || violates(dyx, dxy)) {
        tally.record(Axiom::Symmetry, v.symmetry, {x, y}, dxy, dyx);
    }
    // d(x, x) = 0.
    if (violates(dxx, 0.0)) {
        tally.record(Axiom::IdentityForward, v.identity_forward, {x}, dxx, 0.0);
    }
    // d(x, y) = 0 with x != y breaks identity of indiscernibles.
    if (!violates(dxy, 0.0) && x != y) {
        tally.record(Axiom::IdentityReverse, v.identity_reverse, {x, y}, dxy, 0.0);
    }
    // Triangle: d(x, z) <= d(x, y) + d(y, z).
    const double dxz = measure_value(measure, x, z, epsilon);
    const double dyz = measure_value(measure, y, z, epsilon);
    if (violates(dxz, dxy + dyz)) {
        tally.record(Axiom::Triangle, v.triangle, {x, y, z}, dxz, dxy + dyz);
    }
}

}  // namespace

const char* axiom_name(Axiom a) {
    switch (a) {
        case Axiom::NonNegativity: return "non_negativity";
        case Axiom::Symmetry: return "symmetry";
        case Axiom::IdentityForward: return "identity_forward";
        case Axiom::IdentityReverse: return "identity_reverse";
        case Axiom::Triangle: return "triangle";
    }
    return "?";
}

const char* measure_name(Measure m) { return m == Measure::E ? "E" : "Ebar"; }

VectorTriple canonical_triangle_triple(std::size_t dim) {
    VectorTriple t;
    t[0] = std::vector<double>(dim, 0.0);
    t[1] = std::vector<double>(dim, 0.0);
    t[2] = std::vector<double>(dim, 0.0);
    t[0][0] = 1.0;
    if (dim >= 3) t[1][2] = 1.0;
    t[2][0] = 1.0;
    if (dim >= 2) t[2][1] = 0.1;
    return t;
}

AxiomReport axiom_check(Measure measure, std::uint64_t samples, std::size_t dim,
                        RngState& rng, const std::vector<VectorTriple>& seeded_cases,
                        double epsilon) {
    if (dim < 2) throw DomainError("axiom_check: dim must be >= 2");
    if (samples < 1) throw DomainError("axiom_check: samples must be >= 1");

    AxiomReport report;
    report.measure = measure;
    report.samples = samples;
    report.dim = dim;
    report.epsilon = epsilon;
    Tally tally{&report};

    for (const auto& t : seeded_cases) {
        evaluate_triple(t, measure, epsilon, report, tally);
    }
    for (std::uint64_t s = 0; s < samples; ++s) {
        VectorTriple t;
        for (auto& vec : t) {
            vec.resize(dim);
            for (double& x : vec) x = next_normal(rng);
        }
        evaluate_triple(t, measure, epsilon, report, tally);
    }
    return report;
}

bool reevaluate_counterexample(const AxiomCounterexample& ce, Measure measure,
                               double epsilon) {
    const auto& vs = ce.vectors;
    switch (ce.axiom) {
        case Axiom::NonNegativity:
            return violates(0.0, measure_value(measure, vs[0], vs[1], epsilon));
        case Axiom::Symmetry: {
            const double ab = measure_value(measure, vs[0], vs[1], epsilon);
            const double ba = measure_value(measure, vs[1], vs[0], epsilon);
            return violates(ab, ba) || violates(ba, ab);
        }
        case Axiom::IdentityForward:
            return violates(measure_value(measure, vs[0], vs[0], epsilon), 0.0);
        case Axiom::IdentityReverse: {
            const double d = measure_value(measure, vs[0], vs[1], epsilon);
            return !violates(d, 0.0) && vs[0] != vs[1];
        }
        case Axiom::Triangle: {
            const double xz = measure_value(measure, vs[0], vs[2], epsilon);
            const double xy = measure_value(measure, vs[0], vs[1], epsilon);
            const double yz = measure_value(measure, vs[1], vs[2], epsilon);
            return violates(xz, xy + yz);
        }
    }
    return false;
}

std::string axiom_report_to_json(const AxiomReport& report) {
    nlohmann::json j;
    j["measure"] = measure_name(report.measure);
    j["samples"] = report.samples;
    j["dim"] = report.dim;
    j["epsilon"] = report.epsilon;
    j["violations"] = {
        {"non_negativity", report.violations.non_negativity},
        {"symmetry", report.violations.symmetry},
        {"identity_forward", report.violations.identity_forward},
        {"identity_reverse", report.violations.identity_reverse},
        {"triangle", report.violations.triangle},
    };
    j["counterexamples"] = nlohmann::json::array();
    for (const auto& ce : report.counterexamples) {
        j["counterexamples"].push_back({
            {"axiom", axiom_name(ce.axiom)},
            {"vectors", ce.vectors},
            {"lhs", ce.lhs},
            {"rhs", ce.rhs},
        });
    }
    return j.dump(2);
}

AxiomReport axiom_report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    AxiomReport r;
    r.measure = j.at("measure").get<std::string>() == "E" ? Measure::E : Measure::Ebar;
    r.samples = j.at("samples").get<std::uint64_t>();
    r.dim = j.at("dim").get<std::size_t>();
    r.epsilon = j.at("epsilon").get<double>();
    const auto& v = j.at("violations");
    r.violations.non_negativity = v.at("non_negativity").get<std::uint64_t>();
    r.violations.symmetry = v.at("symmetry").get<std::uint64_t>();
    r.violations.identity_forward = v.at("identity_forward").get<std::uint64_t>();
    r.violations.identity_reverse = v.at("identity_reverse").get<std::uint64_t>();
    r.violations.triangle = v.at("triangle").get<std::uint64_t>();
    for (const auto& cj : j.at("counterexamples")) {
        AxiomCounterexample ce;
        const std::string name = cj.at("axiom").get<std::string>();
        for (Axiom a : {Axiom::NonNegativity, Axiom::Symmetry, Axiom::IdentityForward,
                        Axiom::IdentityReverse, Axiom::Triangle}) {
            if (name == axiom_name(a)) ce.axiom = a;
        }
        ce.vectors = cj.at("vectors").get<std::vector<std::vector<double>>>();
        ce.lhs = cj.at("lhs").get<double>();
        ce.rhs = cj.at("rhs").get<double>();
        r.counterexamples.push_back(std::move(ce));
    }
    return r;
}

}  // namespace yatnn
