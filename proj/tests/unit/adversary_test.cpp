#include <gtest/gtest.h>

#include <cmath>

#include "urates.hpp"

using namespace urates;

namespace {

DiscreteDistribution dist(std::vector<Atom> atoms, double tail = 0) {
  DiscreteDistribution d;
  d.atoms = std::move(atoms);
  d.tail_mass = tail;
  return d;
}

}  // namespace

TEST(Rng, StreamKeyIsNested) {
  EXPECT_EQ(stream_key(7, 24, 3), splitmix64(splitmix64(splitmix64(7) ^ 24) ^ 3));
  EXPECT_NE(stream_key(7, 24, 3), stream_key(7, 24, 4));
  Rng a(1, 2, 3), b(1, 2, 3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  Rng u(5);
  for (int i = 0; i < 1000; ++i) {
    double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Distribution, Validation) {
  EXPECT_NO_THROW(dist({{1, 0.5, 0.2}, {2, 0.5, 1}}).validate());
  EXPECT_THROW(dist({{1, 0.5, 0.2}, {1, 0.5, 1}}).validate(), DomainError);
  EXPECT_THROW(dist({{1, 0.5, 0.2}}).validate(), DomainError);
  EXPECT_THROW(dist({{1, 1.0, 1.2}}).validate(), DomainError);
  EXPECT_THROW(dist({{1, 0.0, 0.2}, {2, 1.0, 0.0}}).validate(), DomainError);
  EXPECT_NO_THROW(dist({{1, 0.75, 0.2}}, 0.25).validate());
}

TEST(Distribution, JsonRoundTrip) {
  auto d = dist({{3, 0.25, 1.0 / 3}, {9, 0.5, 0.1}}, 0.25);
  EXPECT_EQ(d.dump(), R"({"atoms":[{"x":3,"p":0.25,"eta":0.3333333333333333},{"x":9,"p":0.5,"eta":0.1}],"tail_mass":0.25})");
  auto e = DiscreteDistribution::parse(d.dump());
  EXPECT_EQ(e.atoms, d.atoms);
  EXPECT_EQ(e.tail_mass, d.tail_mass);
}

TEST(Sample, Examples) {
  Rng rng(1, 3, 0);
  auto s = sample(dist({{4, 1.0, 1.0}}), 3, rng);
  EXPECT_EQ(s, (LabeledSample{{4, 1}, {4, 1}, {4, 1}}));
  auto z = sample(dist({{4, 1.0, 0.0}}), 2, rng);
  EXPECT_EQ(z, (LabeledSample{{4, 0}, {4, 0}}));
  Rng big(2, 10000, 0);
  auto t = sample(dist({{1, 0.5, 0.5}, {2, 0.5, 0.5}}), 10000, big);
  double f = 0;
  for (const auto& e : t) f += e.x == 1;
  EXPECT_NEAR(f / 10000, 0.5, 0.02);
  EXPECT_THROW(sample(dist({{1, 0.5, 0.5}}, 0.5), 3, rng), DomainError);
}

TEST(Sample, DeterministicPerStream) {
  auto d = dist({{1, 0.3, 0.2}, {2, 0.7, 0.9}});
  Rng a(11, 50, 2), b(11, 50, 2);
  EXPECT_EQ(sample(d, 50, a), sample(d, 50, b));
}

TEST(ExactError, Examples) {
  auto d = dist({{5, 1.0, 1.0 / 3}});
  auto e = exact_error(d, ConstantPredictor{0});
  EXPECT_DOUBLE_EQ(e.lo, 1.0 / 3);
  EXPECT_DOUBLE_EQ(e.hi, 1.0 / 3);
  auto b = dist({{5, 1.0, 0.9}});
  EXPECT_NEAR(exact_error(b, bayes_predictor(b)).lo, 0.1, 1e-15);
  auto t = dist({{5, 0.99, 0.9}}, 0.01);
  auto w = exact_error(t, ConstantPredictor{1});
  EXPECT_NEAR(w.width(), 0.01, 1e-15);
}

TEST(ExactError, BayesRuleIsOptimalOverAllPatterns) {
  auto d = dist({{1, 0.1, 0.2}, {2, 0.2, 0.7}, {3, 0.3, 0.5}, {4, 0.4, 0.95}});
  double bayes = bayes_error(d).lo;
  EXPECT_NEAR(exact_error(d, bayes_predictor(d)).lo, bayes, 1e-15);
  EXPECT_NEAR(bayes, 0.1 * 0.2 + 0.2 * 0.3 + 0.3 * 0.5 + 0.4 * 0.05, 1e-15);
  for (unsigned m = 0; m < 16; ++m) {
    MemorizedPredictor p;
    for (Code x = 1; x <= 4; ++x) p.table[x] = (m >> (x - 1)) & 1U;
    EXPECT_GE(exact_error(d, p).lo, bayes - 1e-15);
  }
}

TEST(ClassOptimalError, Examples) {
  auto pair = finite_lb_pair(ConceptClass::finite_table({5}, {{0}, {1}}));
  auto e = class_optimal_error(pair.p0, ConceptClass::finite_table({5}, {{0}, {1}}));
  EXPECT_DOUBLE_EQ(e.lo, 1.0 / 3);
  EXPECT_DOUBLE_EQ(e.hi, 1.0 / 3);
  auto clean = dist({{2, 0.5, 0.0}, {6, 0.5, 1.0}});
  EXPECT_EQ(class_optimal_error(clean, ConceptClass::threshold_nat()).lo, 0.0);
  // anti-monotone labels: patterns 00, 01, 11 cost 0.6, 1.0, 0.4
  auto anti = dist({{2, 0.6, 1.0}, {6, 0.4, 0.0}});
  EXPECT_NEAR(class_optimal_error(anti, ConceptClass::threshold_nat()).lo, 0.4, 1e-15);
}

TEST(FiniteLbPair, Examples) {
  auto c = ConceptClass::finite_table({3, 8}, {{0, 1}, {0, 0}});
  auto p = finite_lb_pair(c);
  EXPECT_EQ(p.x, 8u);
  ASSERT_EQ(p.p0.atoms.size(), 1u);
  EXPECT_EQ(p.p0.atoms[0], (Atom{8, 1.0, 1.0 / 3}));
  EXPECT_EQ(p.p1.atoms[0], (Atom{8, 1.0, 2.0 / 3}));
  EXPECT_EQ(c.evaluate(p.h0, 8), 0);
  EXPECT_EQ(c.evaluate(p.h1, 8), 1);
  EXPECT_THROW(finite_lb_pair(ConceptClass::finite_table({1}, {{1}})), DomainError);
  auto th = finite_lb_pair(ConceptClass::threshold_nat());
  EXPECT_EQ(th.x, 1u);
  EXPECT_EQ(th.h0, 2u);
  EXPECT_EQ(th.h1, 1u);
}

TEST(NearExp, Masses) {
  auto d = near_exp_family(ConceptClass::threshold_nat(), 0.25, 0, 3);
  ASSERT_EQ(d.atoms.size(), 3u);
  EXPECT_EQ(d.atoms[0].p, 0.5);
  EXPECT_EQ(d.atoms[1].p, 0.25);
  EXPECT_EQ(d.atoms[2].p, 0.125);
  EXPECT_EQ(d.tail_mass, 0.125);
  EXPECT_NO_THROW(d.validate());
}

TEST(NearExp, FirstMemberIsNoiseless) {
  auto c = ConceptClass::threshold_nat();
  auto seq = eluder_sequence(c, 5, 64);
  auto d = near_exp_family(c, 0.25, 1, 5);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(d.atoms[j].eta, static_cast<double>(c.evaluate(seq.witnesses[0], d.atoms[j].x)));
  }
}

TEST(NearExp, BayesErrorClosedForm) {
  auto c = ConceptClass::threshold_nat();
  const double beta = 0.3;
  for (std::size_t i = 0; i <= 6; ++i) {
    auto d = near_exp_family(c, beta, i, 6);
    double want = 0;
    for (std::size_t j = 1; j <= 6; ++j)
      if (i == 0 || j < i) want += beta * std::ldexp(1.0, -static_cast<int>(j));
    EXPECT_NEAR(exact_error(d, bayes_predictor(d)).lo, want, 1e-15) << i;
  }
}

TEST(NearExp, MembersShareMarginalsAndEarlyLabels) {
  auto c = ConceptClass::threshold_nat();
  auto p0 = near_exp_family(c, 0.2, 0, 6);
  for (std::size_t i = 1; i <= 6; ++i) {
    auto pi = near_exp_family(c, 0.2, i, 6);
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(pi.atoms[j].x, p0.atoms[j].x);
      EXPECT_EQ(pi.atoms[j].p, p0.atoms[j].p);
      if (j + 1 < i) EXPECT_EQ(pi.atoms[j].eta, p0.atoms[j].eta);
    }
  }
  EXPECT_THROW(near_exp_family(c, 0.5, 0, 3), DomainError);
  EXPECT_THROW(near_exp_family(c, 0.2, 4, 3), DomainError);
}

TEST(SuperRoot, PowerFamilyConstruction) {
  auto c = ConceptClass::threshold_nat();
  auto tree = shatters_littlestone_tree(c, 6, 64);
  ASSERT_TRUE(tree.shattered);
  std::vector<Label> branch{1, 0, 1, 1, 0, 1};
  auto r = super_root_branch(c, tree.tree, branch, PhiFn::parse("power:0.75"), 5);
  ASSERT_EQ(r.levels.size(), 4u);
  EXPECT_EQ(r.levels[0].p, 0.5);
  EXPECT_EQ(r.levels[0].p_exponent, 1u);
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const auto& l = r.levels[i];
    EXPECT_TRUE(l.rate_ok && l.next_mass_ok && l.eta_ok && l.tail_ok && l.decay_ok) << l.k;
    if (i > 0) {
      EXPECT_GT(l.log2_n, r.levels[i - 1].log2_n);
      EXPECT_LE(l.p, r.levels[i - 1].p / 64);
    }
  }
  EXPECT_NO_THROW(r.dist.validate());
  EXPECT_EQ(r.dist.atoms.size(), 5u);
  EXPECT_EQ(r.dist.atoms[0].eta, 1.0);
  EXPECT_LT(r.dist.atoms[1].eta, 0.5);
  EXPECT_GT(r.dist.atoms[2].eta, 0.5);
  EXPECT_TRUE(is_realizable(c, tree.tree.path(branch)));
}

TEST(SuperRoot, SecondLevelForInverseSqrtLog) {
  // least n with 1 / ln(n + 2) < sqrt(1/32), i.e. n + 2 > e^sqrt(32)
  const double bound = std::exp(std::sqrt(32.0)) - 2;
  const auto want = static_cast<std::uint64_t>(std::floor(bound)) + 1;
  ASSERT_EQ(want, 285u);
  auto c = ConceptClass::threshold_nat();
  auto tree = shatters_littlestone_tree(c, 2, 8);
  auto r = super_root_branch(c, tree.tree, {1, 1}, PhiFn::parse("invsqrtlog"), 2);
  EXPECT_EQ(r.levels[0].n, "285");
}

TEST(SuperRoot, RejectsShallowTreeAndBadPhi) {
  auto c = ConceptClass::threshold_nat();
  auto tree = shatters_littlestone_tree(c, 2, 8);
  EXPECT_THROW(super_root_branch(c, tree.tree, {1, 1, 1}, PhiFn::parse("invsqrtlog"), 3), DomainError);
  EXPECT_THROW(PhiFn::parse("power:0.5"), DomainError);
  EXPECT_THROW(PhiFn::parse("power:1.5"), DomainError);
}
