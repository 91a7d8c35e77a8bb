#include <cmath>

#include "doctest.h"
#include "yatnn/axioms.hpp"
#include "yatnn/errors.hpp"

using namespace yatnn;

TEST_SUITE("axioms") {

TEST_CASE("E measure: non-negativity and symmetry never violated") {
    RngState rng{1, 0};
    AxiomReport report = axiom_check(Measure::E, 10000, 3, rng, {});
    CHECK(report.violations.non_negativity == 0);
    CHECK(report.violations.symmetry == 0);
    // E(x,x) = |x|^4 / eps is far from zero, so every draw breaks d(x,x)=0.
    CHECK(report.violations.identity_forward == 10000);
}

TEST_CASE("Ebar measure: identity forward holds exactly") {
    RngState rng{2, 0};
    AxiomReport report = axiom_check(Measure::Ebar, 10000, 4, rng, {});
    CHECK(report.violations.non_negativity == 0);
    CHECK(report.violations.symmetry == 0);
    CHECK(report.violations.identity_forward == 0);
}

TEST_CASE("seeded triple is recorded as a triangle violation for E") {
    RngState rng{3, 0};
    const auto triple = canonical_triangle_triple(3);
    AxiomReport report = axiom_check(Measure::E, 1, 3, rng, {triple});
    CHECK(report.violations.triangle >= 1);

    bool found = false;
    for (const auto& ce : report.counterexamples) {
        if (ce.axiom == Axiom::Triangle && ce.vectors.size() == 3 &&
            ce.vectors[0] == triple[0] && ce.vectors[1] == triple[1] &&
            ce.vectors[2] == triple[2]) {
            found = true;
            // E(a, c) = 1 / (0.01 + eps) with zero d(a,b) + d(b,c).
            CHECK(ce.lhs == doctest::Approx(1.0 / (0.01 + 1e-6)).epsilon(1e-9));
            CHECK(ce.rhs == 0.0);
        }
    }
    CHECK(found);
    // The orthogonal seeded pair also exhibits E's identity-reverse failure:
    // distance zero between distinct vectors.
    CHECK(report.violations.identity_reverse >= 1);
}

TEST_CASE("stored counterexamples re-evaluate as violations") {
    RngState rng{4, 0};
    AxiomReport report =
        axiom_check(Measure::E, 5000, 3, rng, {canonical_triangle_triple(3)});
    CHECK(report.counterexamples.size() <= 10);
    CHECK(!report.counterexamples.empty());
    for (const auto& ce : report.counterexamples) {
        CHECK(reevaluate_counterexample(ce, report.measure, report.epsilon));
    }
}

TEST_CASE("axiom report survives a JSON round trip") {
    RngState rng{5, 0};
    AxiomReport report =
        axiom_check(Measure::Ebar, 500, 2, rng, {canonical_triangle_triple(2)});
    AxiomReport parsed = axiom_report_from_json(axiom_report_to_json(report));
    CHECK(parsed.measure == report.measure);
    CHECK(parsed.samples == report.samples);
    CHECK(parsed.dim == report.dim);
    CHECK(parsed.epsilon == report.epsilon);
    CHECK(parsed.violations.non_negativity == report.violations.non_negativity);
    CHECK(parsed.violations.symmetry == report.violations.symmetry);
    CHECK(parsed.violations.identity_forward == report.violations.identity_forward);
    CHECK(parsed.violations.identity_reverse == report.violations.identity_reverse);
    CHECK(parsed.violations.triangle == report.violations.triangle);
    REQUIRE(parsed.counterexamples.size() == report.counterexamples.size());
    for (std::size_t i = 0; i < parsed.counterexamples.size(); ++i) {
        CHECK(parsed.counterexamples[i].axiom == report.counterexamples[i].axiom);
        CHECK(parsed.counterexamples[i].vectors == report.counterexamples[i].vectors);
        CHECK(parsed.counterexamples[i].lhs == report.counterexamples[i].lhs);
        CHECK(parsed.counterexamples[i].rhs == report.counterexamples[i].rhs);
    }
}

TEST_CASE("dimension and sample preconditions") {
    RngState rng{6, 0};
    CHECK_THROWS_AS(axiom_check(Measure::E, 10, 1, rng, {}), DomainError);
    CHECK_THROWS_AS(axiom_check(Measure::E, 0, 3, rng, {}), DomainError);
}

}  // TEST_SUITE
