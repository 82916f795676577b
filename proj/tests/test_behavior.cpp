#include <doctest.h>

#include <cmath>

#include "viralfb/behavior.hpp"
#include "viralfb/error.hpp"

using namespace viralfb;

namespace {

ModelParams with(double b, double c, double k = 1.0) {
  ModelParams p;
  p.b = b;
  p.c = c;
  p.k = k;
  return p;
}

Trajectory simulate(const ModelParams& p, double T, int n) {
  RunOptions o;
  o.T = T;
  o.n = n;
  return run(InitialData::sine_bumps(p.h0), p, o);
}

const Criterion& find(const ClassificationResult& r, const std::string& name) {
  for (const auto& c : r.evidence)
    if (c.name == name) return c;
  FAIL("missing evidence " << name);
  return r.evidence.front();
}

bool consistent(const ClassificationResult& r) {
  switch (r.regime) {
    case Regime::Extinction:
      return r.r0 <= 1.0;
    case Regime::PersistenceVerified:
      return r.r0 > 1.0 && r.persistence_condition;
    case Regime::PersistenceUnverified:
      return r.r0 > 1.0 && !r.persistence_condition;
    case Regime::Inconclusive:
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("regime names") {
  CHECK(to_string(Regime::Extinction) == "Extinction");
  CHECK(to_string(Regime::PersistenceVerified) == "PersistenceVerified");
  CHECK(to_string(Regime::PersistenceUnverified) == "PersistenceUnverified");
  CHECK(to_string(Regime::Inconclusive) == "Inconclusive");
}

TEST_CASE("extinction below threshold") {
  const ModelParams p = with(1.0, 2.0);
  const Trajectory tr = simulate(p, 200.0, 1600);
  const auto r = classify(p, tr, nullptr);
  CHECK(r.r0 == doctest::Approx(0.5));
  CHECK(r.regime == Regime::Extinction);
  CHECK(find(r, "sup_u2").measured <= 1e-4);
  CHECK(find(r, "sup_u3").measured <= 1e-4);
  CHECK(find(r, "u1_vs_closed_form").measured <= 1e-3);
  CHECK(std::isnan(r.lower_margin[0]));
  CHECK(r.t_final == doctest::Approx(200.0));
  CHECK(consistent(r));

  // Determinism: the same inputs give the same result.
  const auto again = classify(p, simulate(p, 200.0, 1600), nullptr);
  CHECK(again.regime == r.regime);
  CHECK(again.quiescence_change == r.quiescence_change);
  REQUIRE(again.evidence.size() == r.evidence.size());
  for (std::size_t i = 0; i < r.evidence.size(); ++i) CHECK(again.evidence[i].measured == r.evidence[i].measured);

  // A shorter run has larger extinction margins to close, never a flip.
  const auto shorter = classify(p, simulate(p, 100.0, 1600), nullptr);
  CHECK(shorter.regime != Regime::PersistenceVerified);
  CHECK(shorter.regime != Regime::PersistenceUnverified);
  CHECK(find(shorter, "sup_u2").measured >= find(r, "sup_u2").measured);
  CHECK(find(shorter, "sup_u3").measured >= find(r, "sup_u3").measured);
}

TEST_CASE("R0 = 1 takes the extinction branch") {
  const ModelParams p;
  REQUIRE(basic_reproduction_number(p) == 1.0);
  const auto r = classify(p, simulate(p, 50.0, 200), nullptr);
  CHECK(r.evidence.size() == 3);
  CHECK(r.evidence[0].name == "sup_u2");
  CHECK(r.evidence[2].name == "u1_vs_closed_form");
  CHECK((r.regime == Regime::Extinction || r.regime == Regime::Inconclusive));
}

TEST_CASE("persistence sandwich above threshold") {
  const ModelParams p = with(2.0, 1.0);
  const EquilibriumChain chain = build_chain(p, ContinuationOptions{});
  const Trajectory tr = simulate(p, 200.0, 800);
  const auto r = classify(p, tr, &chain);
  CHECK(r.regime == Regime::PersistenceVerified);
  CHECK(consistent(r));
  CHECK(r.evidence.size() == 6);
  for (int c = 0; c < 3; ++c) {
    CHECK(r.lower_margin[std::size_t(c)] >= 0.0);
    CHECK(r.upper_margin[std::size_t(c)] >= 0.0);
  }
  CHECK(find(r, "lower_u2").measured == r.lower_margin[1]);
  CHECK_THROWS_AS(classify(p, tr, nullptr), InputError);

  // A state pushed far above the upper profiles breaks the upper half.
  Trajectory high = tr;
  for (int c = 0; c < 3; ++c)
    for (int j = 1; j + 1 < high.final_state.U.nodes(); ++j) high.final_state.U(c, j) += 1.0;
  const auto broken = classify(p, high, &chain);
  CHECK(broken.regime == Regime::Inconclusive);
  CHECK(broken.upper_margin[1] < 0.0);
}

TEST_CASE("persistence without the lower sandwich") {
  const ModelParams p = with(10.0, 10.0, 1.2);
  REQUIRE(basic_reproduction_number(p) > 1.0);
  REQUIRE_FALSE(persistence_condition(p));
  const EquilibriumChain chain = build_chain(p, ContinuationOptions{});
  const auto r = classify(p, simulate(p, 100.0, 400), &chain);
  CHECK(r.regime == Regime::PersistenceUnverified);
  CHECK(consistent(r));
  CHECK(r.evidence.size() == 3);
  CHECK(std::isnan(r.lower_margin[0]));
  CHECK(r.upper_margin[2] >= 0.0);
}

TEST_CASE("extinction evidence that fails yields an inconclusive regime") {
  const ModelParams p = with(1.0, 2.0);
  Trajectory tr = simulate(p, 1.0, 100);
  const auto r = classify(p, tr, nullptr);
  CHECK(r.regime == Regime::Inconclusive);
  CHECK_FALSE(find(r, "sup_u2").pass);
  CHECK(consistent(r));
  tr.observations.clear();
  CHECK_THROWS_AS(classify(p, tr, nullptr), InputError);
}

TEST_CASE("quiescence is reported from the tail of the run") {
  const ModelParams p = with(1.0, 2.0);
  Trajectory tr = simulate(p, 1.0, 50);
  tr.observations.clear();
  for (int i = 0; i <= 20; ++i) {
    Observation ob;
    ob.t = 0.5 * i;
    ob.sup = {1.0, 0.0, 0.0};
    tr.observations.push_back(ob);
  }
  CHECK(classify(p, tr, nullptr).quiescent);
  tr.observations.back().sup[0] = 1.1;
  const auto r = classify(p, tr, nullptr);
  CHECK_FALSE(r.quiescent);
  CHECK(r.quiescence_change == doctest::Approx(0.1 / 1.1));
}
