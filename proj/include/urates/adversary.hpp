#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "predictor.hpp"

namespace urates {

struct Interval {
  double lo = 0, hi = 0;
  double width() const { return hi - lo; }
};

inline double atom_loss(const Atom& a, Label y) { return y ? 1.0 - a.eta : a.eta; }

inline Interval exact_error(const DiscreteDistribution& d, const Predictor& h) {
  CompensatedSum s;
  for (const auto& a : d.atoms) s.add(a.p * atom_loss(a, h(a.x)));
  double lo = s.value();
  return {lo, lo + d.tail_mass};
}

inline Interval bayes_error(const DiscreteDistribution& d) {
  CompensatedSum s;
  for (const auto& a : d.atoms) s.add(a.p * std::min(a.eta, 1.0 - a.eta));
  double lo = s.value();
  return {lo, lo + d.tail_mass};
}

inline MemorizedPredictor bayes_predictor(const DiscreteDistribution& d) {
  MemorizedPredictor p;
  for (const auto& a : d.atoms) p.table[a.x] = a.eta >= 0.5 ? 1 : 0;
  return p;
}

inline Interval class_optimal_error(const DiscreteDistribution& d, const ConceptClass& c) {
  HypothesisTable t(c, d.points());
  std::vector<std::size_t> at;
  for (const auto& a : d.atoms) at.push_back(t.require_index(a.x));
  double best = 1.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    CompensatedSum s;
    for (std::size_t i = 0; i < d.atoms.size(); ++i) s.add(d.atoms[i].p * atom_loss(d.atoms[i], t.label(r, at[i])));
    best = std::min(best, s.value());
  }
  return {best, best + d.tail_mass};
}

struct FiniteLbPair {
  Code x = 0;
  HypId h0 = 0, h1 = 0;
  DiscreteDistribution p0, p1;
};

inline FiniteLbPair finite_lb_pair(const ConceptClass& c, std::size_t domain_budget = 64) {
  for (Code x : c.domain_prefix(domain_budget)) {
    auto h0 = first_consistent(c, {{x, 0}});
    auto h1 = first_consistent(c, {{x, 1}});
    if (!h0 || !h1) continue;
    FiniteLbPair out;
    out.x = x;
    out.h0 = *h0;
    out.h1 = *h1;
    out.p0.atoms = {{x, 1.0, 1.0 / 3.0}};
    out.p1.atoms = {{x, 1.0, 2.0 / 3.0}};
    return out;
  }
  throw DomainError("no disagreement point found");
}

// Atoms x_j with mass 2^-j along the eluder sequence, j = 1..depth.
// i = 0: label y_j flipped with probability beta.
// i >= 1: as i = 0 for j < i, labels of witness h_i without noise for j >= i.
inline DiscreteDistribution near_exp_family(const ConceptClass& c, double beta, std::size_t i, std::size_t depth,
                                            std::size_t domain_budget = 64) {
  if (!(beta > 0 && beta < 0.5)) throw DomainError("beta must lie in (0, 1/2)");
  if (depth < 1 || depth > 60) throw DomainError("depth must lie in 1..60");
  if (i > depth) throw DomainError("i must not exceed depth");
  auto seq = eluder_sequence(c, depth, domain_budget);
  DiscreteDistribution d;
  for (std::size_t j = 1; j <= depth; ++j) {
    const auto& e = seq.pairs[j - 1];
    double eta;
    if (i == 0 || j < i)
      eta = e.y ? 1.0 - beta : beta;
    else
      eta = c.evaluate(seq.witnesses[i - 1], e.x);
    d.atoms.push_back({e.x, std::ldexp(1.0, -static_cast<int>(j)), eta});
  }
  d.tail_mass = std::ldexp(1.0, -static_cast<int>(depth));
  return d;
}

// Rate function phi with sqrt(n) phi(n) nonincreasing in n >= 1.
//   invsqrtlog: 1 / (sqrt(n) ln(n + 2))
//   power:A   : n^-A, 1/2 < A <= 1
struct PhiFn {
  enum class Family { invsqrtlog, power };
  Family family = Family::invsqrtlog;
  double a = 0;

  static PhiFn parse(const std::string& s) {
    PhiFn f;
    if (s == "invsqrtlog") return f;
    if (s.rfind("power:", 0) == 0) {
      f.family = Family::power;
      f.a = std::stod(s.substr(6));
      if (!(f.a > 0.5 && f.a <= 1.0)) throw DomainError("power phi needs 1/2 < A <= 1");
      return f;
    }
    throw DomainError("unknown phi '" + s + "'");
  }

  std::string str() const {
    if (family == Family::invsqrtlog) return "invsqrtlog";
    std::ostringstream os;
    os << "power:" << a;
    return os.str();
  }
};

struct SuperRootLevel {
  std::size_t k = 0;
  std::string n;  // decimal
  double log2_n = 0;
  std::uint64_t p_exponent = 0;  // p_k = 2^-p_exponent (k >= 2)
  double p = 0;
  double eta = 0;
  double eta_excess = 0;  // eta - 1/2 toward the branch label
  bool rate_ok = false;
  bool next_mass_ok = false;
  bool eta_ok = false;
  bool tail_ok = false;
  bool decay_ok = false;
};

struct SuperRootBranch {
  DiscreteDistribution dist;
  std::vector<SuperRootLevel> levels;
  std::size_t certified_depth = 0;
};

class SuperRootError : public Error {
 public:
  SuperRootError(const std::string& what, std::vector<SuperRootLevel> done) : Error(what), levels(std::move(done)) {}
  std::vector<SuperRootLevel> levels;
};

namespace detail {

using BigFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<620>>;
using BigInt = boost::multiprecision::mpz_int;

constexpr unsigned big_bits = 2050;
constexpr unsigned max_n_bits = 1900;

inline BigFloat sqrt_n_phi(const PhiFn& f, const BigInt& n) {
  BigFloat x(n);
  if (f.family == PhiFn::Family::invsqrtlog) return 1 / log(x + 2);
  return pow(x, BigFloat(0.5) - BigFloat(f.a));
}

inline BigFloat phi(const PhiFn& f, const BigInt& n) { return sqrt_n_phi(f, n) / sqrt(BigFloat(n)); }

// sign of a - b, or 0 when the gap is below the working precision
inline int certified_cmp(const BigFloat& a, const BigFloat& b) {
  BigFloat diff = a - b;
  BigFloat scale = std::max(abs(a), abs(b));
  BigFloat tol = ldexp(scale, -static_cast<int>(big_bits - 96));
  if (abs(diff) <= tol) return 0;
  return diff > 0 ? 1 : -1;
}

inline BigFloat pow2(std::int64_t e) { return ldexp(BigFloat(1), static_cast<int>(e)); }

inline std::size_t bit_length(const BigInt& n) {
  return n == 0 ? 0 : static_cast<std::size_t>(boost::multiprecision::msb(n)) + 1;
}

// least n > prev with sqrt(n) phi(n) < c
inline BigInt next_n(const PhiFn& f, const BigInt& prev, const BigFloat& c, std::size_t k) {
  BigInt lo = prev + 1;
  if (certified_cmp(sqrt_n_phi(f, lo), c) < 0) return lo;
  BigInt bad = lo, hi = lo * 2;
  while (certified_cmp(sqrt_n_phi(f, hi), c) >= 0) {
    bad = hi;
    hi *= 2;
    if (bit_length(hi) > max_n_bits)
      throw BudgetError("n_" + std::to_string(k) + " exceeds the representable range (2^" +
                        std::to_string(max_n_bits) + ")");
  }
  while (hi - bad > 1) {
    BigInt mid = (bad + hi) / 2;
    if (certified_cmp(sqrt_n_phi(f, mid), c) < 0)
      hi = mid;
    else
      bad = mid;
  }
  return hi;
}

}  // namespace detail

// Distribution along one branch of a Littlestone tree of depth >= K.
// Depth 1 carries the leftover mass with a noiseless label; depths k >= 2 carry
// p_k with P(Y = y_k | x) = 1/2 + phi(n_k) / (2 p_k).
inline SuperRootBranch super_root_branch(const ConceptClass& c, const LittlestoneTree& tree,
                                         const std::vector<Label>& branch, const PhiFn& phi, std::size_t K) {
  using detail::BigFloat;
  using detail::BigInt;
  if (K < 2) throw DomainError("depth K must be >= 2");
  if (tree.depth < K) throw DomainError("tree too shallow for depth " + std::to_string(K));
  if (branch.size() < K) throw DomainError("branch shorter than depth");
  std::vector<Label> used(branch.begin(), branch.begin() + static_cast<std::ptrdiff_t>(K));
  if (!is_realizable(c, tree.path(used))) throw DomainError("branch path is not realizable by the class");

  std::vector<SuperRootLevel> levels;
  std::vector<BigInt> ns(K + 1);
  std::vector<std::uint64_t> ex(K + 2, 0);
  ns[1] = 0;
  ex[2] = 1;
  for (std::size_t k = 2; k <= K; ++k) {
    SuperRootLevel lv;
    lv.k = k;
    lv.p_exponent = ex[k];
    try {
      BigFloat pk = detail::pow2(-static_cast<std::int64_t>(ex[k]));
      BigFloat ck = sqrt(pk / 16);
      ns[k] = detail::next_n(phi, ns[k - 1], ck, k);
      BigInt nk = ns[k];
      lv.n = nk.str();
      lv.log2_n = static_cast<double>(log(BigFloat(nk)) / log(BigFloat(2)));
      lv.rate_ok = detail::certified_cmp(detail::sqrt_n_phi(phi, nk), ck) < 0;
      BigFloat ph = detail::phi(phi, nk);
      if (detail::certified_cmp(ph * BigFloat(nk), BigFloat(1)) < 0)
        throw DomainError("phi(n) < 1/n at n_" + std::to_string(k));
      BigFloat excess = ph / (2 * pk);
      lv.eta_excess = static_cast<double>(excess);
      lv.eta_ok = detail::certified_cmp(excess, BigFloat(0)) > 0 &&
                  detail::certified_cmp(excess, BigFloat(1) / 32) < 0;
      if (!lv.eta_ok)
        throw DomainError("eta at depth " + std::to_string(k) + " leaves (1/2, 17/32); phi violates the constraints");
      // p_{k+1} = 2^-(ceil(log2(4 n_k)) + 1)
      BigInt four_n = 4 * nk;
      std::uint64_t ceil_log = detail::bit_length(four_n - 1);
      ex[k + 1] = ceil_log + 1;
      lv.next_mass_ok = four_n < (BigInt(1) << ex[k + 1]);
      lv.decay_ok = ex[k + 1] >= ex[k] + 6;
    } catch (const BudgetError& e) {
      throw SuperRootError(e.what(), levels);
    } catch (const Error& e) {
      throw SuperRootError(e.what(), levels);
    }
    lv.p = std::ldexp(1.0, -static_cast<int>(std::min<std::uint64_t>(ex[k], 2000)));
    lv.eta = branch[k - 1] ? 0.5 + lv.eta_excess : 0.5 - lv.eta_excess;
    levels.push_back(lv);
  }
  // sum_{k' > k} p_k' < 16 / (63 n_k), exact over the truncated tail
  for (std::size_t k = 2; k <= K; ++k) {
    if (k == K) {
      levels[k - 2].tail_ok = true;
      continue;
    }
    std::uint64_t top = ex[K];
    BigInt num = 0;
    for (std::size_t j = k + 1; j <= K; ++j) num += BigInt(1) << (top - ex[j]);
    levels[k - 2].tail_ok = num * 63 * ns[k] < BigInt(16) * (BigInt(1) << top);
  }

  SuperRootBranch out;
  CompensatedSum rest;
  for (std::size_t k = 2; k <= K; ++k) rest.add(levels[k - 2].p);
  std::vector<Label> prefix;
  out.dist.atoms.push_back({tree.at(prefix), 1.0 - rest.value(), static_cast<double>(branch[0])});
  prefix.push_back(branch[0]);
  for (std::size_t k = 2; k <= K; ++k) {
    out.dist.atoms.push_back({tree.at(prefix), levels[k - 2].p, levels[k - 2].eta});
    prefix.push_back(branch[k - 1]);
  }
  out.dist.tail_mass = 0;
  out.levels = std::move(levels);
  out.certified_depth = K;
  return out;
}

}  // namespace urates
