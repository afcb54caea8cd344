#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "predictor.hpp"

namespace urates {

inline std::uint64_t ceil_sqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while (r * r < n) ++r;
  return r;
}

// psi(n), lifted to at least ceil(sqrt(n)).
//   sqrt     : ceil(sqrt(n))
//   power:A  : ceil(n^A), 0 < A < 1
//   logpoly:K: ceil(ln(n)^K)
struct PsiFn {
  enum class Family { sqrt, power, logpoly };
  Family family = Family::sqrt;
  double a = 0.5;

  static PsiFn parse(const std::string& s) {
    PsiFn f;
    if (s == "sqrt") return f;
    if (s.rfind("power:", 0) == 0) {
      f.family = Family::power;
      f.a = std::stod(s.substr(6));
      if (!(f.a > 0 && f.a < 1)) throw DomainError("power psi needs 0 < A < 1");
      return f;
    }
    if (s.rfind("logpoly:", 0) == 0) {
      f.family = Family::logpoly;
      f.a = std::stod(s.substr(8));
      if (!(f.a > 0)) throw DomainError("logpoly psi needs K > 0");
      return f;
    }
    throw DomainError("unknown psi '" + s + "'");
  }

  std::string str() const {
    if (family == Family::sqrt) return "sqrt";
    std::ostringstream os;
    os << (family == Family::power ? "power:" : "logpoly:") << a;
    return os.str();
  }

  std::uint64_t operator()(std::uint64_t n) const {
    std::uint64_t base = ceil_sqrt(n);
    double v = 0;
    switch (family) {
      case Family::sqrt: return base;
      case Family::power: v = std::ceil(std::pow(static_cast<double>(n), a)); break;
      case Family::logpoly: v = n < 2 ? 0.0 : std::ceil(std::pow(std::log(static_cast<double>(n)), a)); break;
    }
    return std::max(base, static_cast<std::uint64_t>(v));
  }
};

struct LearnerConfig {
  PsiFn psi;
  SoaBudgets soa;
  std::size_t exp_b_cap = 12;
  std::size_t vcl_b_cap = 10;
  PartialBudgets partial;
  std::string seed_policy = "counter";
};

inline Predictor erm_finite(ClassPtr cls, const LabeledSample& s) {
  auto hyps = cls->hypotheses();
  HypId best = hyps.front();
  std::size_t best_err = s.size() + 1;
  for (HypId h : hyps) {
    std::size_t err = 0;
    for (const auto& e : s) err += cls->evaluate(h, e.x) != e.y;
    if (err < best_err) {
      best_err = err;
      best = h;
    }
  }
  return HypothesisPredictor{std::move(cls), best};
}

// Per-point majority label, ties and unseen points to 0.
inline MemorizedPredictor memorize_baseline(const LabeledSample& s) {
  std::map<Code, long> votes;
  for (const auto& e : s) votes[e.x] += e.y ? 1 : -1;
  MemorizedPredictor p;
  for (const auto& [x, v] : votes) p.table[x] = v > 0 ? 1 : 0;
  return p;
}

inline std::size_t count_errors(const Predictor& h, const LabeledSample& s) {
  std::size_t err = 0;
  for (const auto& e : s) err += h(e.x) != e.y;
  return err;
}

namespace detail {

inline LabeledSample slice(const LabeledSample& s, std::size_t from, std::size_t to) {
  return LabeledSample(s.begin() + static_cast<std::ptrdiff_t>(from), s.begin() + static_cast<std::ptrdiff_t>(to));
}

// Visits every relabeling y of the batch in lexicographic order (first label most
// significant), sharing the conservative SOA pass over common prefixes.
template <class Leaf>
void relabel_walk(SoaEngine& eng, const std::vector<std::size_t>& points, std::size_t t, const HypSet& v,
                  std::uint64_t y, Leaf& leaf) {
  if (t == points.size()) {
    leaf(y, v);
    return;
  }
  bool off = false;
  std::size_t mistakes = 0;
  for (Label lab = 0; lab < 2; ++lab) {
    HypSet next = eng.step(v, points[t], lab, off, mistakes);
    relabel_walk(eng, points, t + 1, next, (y << 1) | lab, leaf);
  }
}

template <class Leaf>
void for_each_relabeling(SoaEngine& eng, const std::vector<std::size_t>& points, Leaf&& leaf) {
  HypSet all = eng.table().all();
  relabel_walk(eng, points, 0, all, 0, leaf);
}

inline LabeledSample relabel(const LabeledSample& batch, std::uint64_t y) {
  LabeledSample out = batch;
  const std::size_t b = batch.size();
  for (std::size_t t = 0; t < b; ++t) out[t].y = static_cast<Label>((y >> (b - 1 - t)) & 1U);
  return out;
}

inline bool good_threshold_met(std::size_t good, std::size_t total) { return 10 * good >= 9 * total; }

}  // namespace detail

struct ExpRateTrace {
  std::size_t n = 0;
  std::uint64_t psi = 0;
  std::size_t b_cap = 0;
  std::size_t b_max = 0;
  // indexed [b-1][i-1]
  std::vector<std::vector<std::size_t>> s1_errors;
  std::vector<std::vector<std::uint64_t>> choice;
  std::vector<std::vector<std::size_t>> good;
  std::optional<std::size_t> b_hat;
  bool early_termination = false;
  bool chose_h1 = false;
  std::size_t s2_errors_h1 = 0;
  std::size_t s2_errors_h0 = 0;
};

// Near-exponential learner on thirds of the sample.
inline Predictor exp_rate_learner(ClassPtr cls, const LabeledSample& sample, const LearnerConfig& cfg = {},
                                  ExpRateTrace* trace = nullptr, const std::vector<Code>& extra_domain = {}) {
  if (sample.size() < 3) throw DomainError("exp_rate_learner needs at least 3 examples");
  const std::size_t n = 3 * (sample.size() / 3), m = n / 3;
  const LabeledSample S0 = detail::slice(sample, 0, m), S1 = detail::slice(sample, m, 2 * m),
                      S2 = detail::slice(sample, 2 * m, n);
  const std::uint64_t psi = cfg.psi(n);

  std::vector<Code> extra = extra_domain;
  for (std::size_t t = 0; t < n; ++t) extra.push_back(sample[t].x);
  SoaEngine eng(*cls, soa_domain(*cls, cfg.soa.domain_budget, extra), cfg.soa.depth_budget);
  auto idx = [&](Code x) { return eng.table().require_index(x); };

  std::unordered_map<HypSet, std::size_t, HypSetHash> s1_memo;
  auto s1_error = [&](const HypSet& v) {
    auto it = s1_memo.find(v);
    if (it != s1_memo.end()) return it->second;
    std::size_t err = 0;
    for (const auto& e : S1) err += eng.predict(v, idx(e.x)) != e.y;
    s1_memo.emplace(v, err);
    return err;
  };

  const std::size_t b_max = std::min(cfg.exp_b_cap, m);
  std::vector<std::vector<std::size_t>> err(b_max);
  std::vector<std::vector<std::uint64_t>> choice(b_max);
  std::vector<std::vector<HypSet>> chosen(b_max);
  for (std::size_t b = 1; b <= b_max; ++b) {
    const std::size_t I = m / b;
    for (std::size_t i = 1; i <= I; ++i) {
      std::vector<std::size_t> pts;
      for (std::size_t t = (i - 1) * b; t < i * b; ++t) pts.push_back(idx(S0[t].x));
      std::size_t best = S1.size() + 1;
      std::uint64_t best_y = 0;
      HypSet best_v;
      try {
        detail::for_each_relabeling(eng, pts, [&](std::uint64_t y, const HypSet& v) {
          std::size_t e = s1_error(v);
          if (e < best) {
            best = e;
            best_y = y;
            best_v = v;
          }
        });
      } catch (const BudgetError& ex) {
        throw BudgetError(std::string(ex.what()) + " at (b=" + std::to_string(b) + ", i=" + std::to_string(i) + ")");
      }
      err[b - 1].push_back(best);
      choice[b - 1].push_back(best_y);
      chosen[b - 1].push_back(std::move(best_v));
    }
  }

  const double md = static_cast<double>(m);
  std::vector<std::vector<std::size_t>> good(b_max);
  std::optional<std::size_t> b_hat;
  for (std::size_t b = 1; b <= b_max; ++b) {
    double bound = INFINITY;
    for (std::size_t bp = b + 1; bp <= b_max; ++bp) {
      std::size_t lo = *std::min_element(err[bp - 1].begin(), err[bp - 1].end());
      bound = std::min(bound, static_cast<double>(lo) / md +
                                  deviation_threshold(ThresholdKind::exp_goodi, static_cast<double>(n),
                                                      static_cast<double>(psi), static_cast<double>(bp)));
    }
    for (std::size_t i = 1; i <= err[b - 1].size(); ++i)
      if (static_cast<double>(err[b - 1][i - 1]) / md <= bound) good[b - 1].push_back(i);
    if (!b_hat && detail::good_threshold_met(good[b - 1].size(), err[b - 1].size())) b_hat = b;
  }

  MemorizedPredictor h0 = memorize_baseline(S0);
  if (trace) {
    trace->n = n;
    trace->psi = psi;
    trace->b_cap = cfg.exp_b_cap;
    trace->b_max = b_max;
    trace->s1_errors = err;
    trace->choice = choice;
    trace->good = good;
    trace->b_hat = b_hat;
    trace->early_termination = !b_hat;
    trace->chose_h1 = false;
  }
  if (!b_hat) return h0;

  const std::size_t bh = *b_hat;
  MajorityPredictor h1;
  for (std::size_t i = 1; i <= choice[bh - 1].size(); ++i) {
    auto batch = detail::relabel(detail::slice(S0, (i - 1) * bh, i * bh), choice[bh - 1][i - 1]);
    auto state = eng.train(batch);
    h1.voters.push_back(make_soa_predictor(cls, eng, state, cfg.soa));
  }
  std::size_t e1 = 0;
  for (const auto& e : S2) {
    std::size_t ones = 0;
    for (const auto& v : chosen[bh - 1]) ones += eng.predict(v, idx(e.x));
    e1 += (2 * ones >= chosen[bh - 1].size() ? 1 : 0) != e.y;
  }
  std::size_t e0 = count_errors(h0, S2);
  bool pick1 = static_cast<double>(e1) / md <= static_cast<double>(e0) / md +
                                                   deviation_threshold(ThresholdKind::exp_final,
                                                                       static_cast<double>(n),
                                                                       static_cast<double>(psi));
  if (trace) {
    trace->chose_h1 = pick1;
    trace->s2_errors_h1 = e1;
    trace->s2_errors_h0 = e0;
  }
  if (pick1) return h1;
  return h0;
}

struct VclRootTrace {
  std::size_t n = 0;
  std::size_t b_cap = 0;
  std::size_t b_min = 0;
  std::size_t b_max = 0;
  // indexed [b-1][i-1]; empty optional means G_{b,i}(S1) is empty
  std::vector<std::vector<std::optional<std::size_t>>> s1_min_errors;
  std::vector<std::vector<std::size_t>> good;
  std::optional<std::size_t> b_hat;
  bool early_termination = false;
  bool chose_h1 = false;
  std::size_t s3_errors_h1 = 0;
  std::size_t s3_errors_h0 = 0;
};

// Super-root learner on quarters of the sample. Batch sizes up to the class's VC
// dimension have no pattern-avoidance function and are not admissible.
inline Predictor super_root_learner(ClassPtr cls, const LabeledSample& sample, const LearnerConfig& cfg = {},
                                    VclRootTrace* trace = nullptr) {
  if (sample.size() < 4) throw DomainError("super_root_learner needs at least 4 examples");
  const std::size_t n = 4 * (sample.size() / 4), m = n / 4;
  const LabeledSample S0 = detail::slice(sample, 0, m), S1 = detail::slice(sample, m, 2 * m),
                      S2 = detail::slice(sample, 2 * m, 3 * m), S3 = detail::slice(sample, 3 * m, n);
  const std::size_t b_max = std::min(cfg.vcl_b_cap, m);
  DimResult vc = vc_dimension(*cls, b_max + 1);
  const std::size_t b_min = vc.saturated ? b_max + 1 : vc.value + 1;

  std::vector<std::vector<std::optional<std::size_t>>> err(b_max);
  std::vector<std::vector<PartialClass>> gs(b_max);
  for (std::size_t b = b_min; b <= b_max; ++b) {
    const std::size_t I = m / b;
    for (std::size_t i = 1; i <= I; ++i) {
      try {
        gs[b - 1].push_back(induce_partial_class(cls, detail::slice(S0, (i - 1) * b, i * b), cfg.partial));
        err[b - 1].push_back(partial_min_error(gs[b - 1].back(), S1, cfg.partial));
      } catch (const BudgetError& ex) {
        throw BudgetError(std::string(ex.what()) + " at (b=" + std::to_string(b) + ", i=" + std::to_string(i) + ")");
      }
    }
  }

  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  std::vector<std::vector<std::size_t>> good(b_max);
  std::optional<std::size_t> b_hat;
  for (std::size_t b = b_min; b <= b_max; ++b) {
    double bound = INFINITY;
    for (std::size_t bp = b + 1; bp <= b_max; ++bp) {
      for (const auto& e : err[bp - 1])
        if (e)
          bound = std::min(bound, static_cast<double>(*e) / md +
                                      deviation_threshold(ThresholdKind::vcl_goodi, nd, 0, static_cast<double>(bp)));
    }
    for (std::size_t i = 1; i <= err[b - 1].size(); ++i) {
      const auto& e = err[b - 1][i - 1];
      if (e && static_cast<double>(*e) / md <= bound) good[b - 1].push_back(i);
    }
    if (!b_hat && detail::good_threshold_met(good[b - 1].size(), err[b - 1].size())) b_hat = b;
  }

  MemorizedPredictor h0 = memorize_baseline(S0);
  if (trace) {
    trace->n = n;
    trace->b_cap = cfg.vcl_b_cap;
    trace->b_min = b_min;
    trace->b_max = b_max;
    trace->s1_min_errors = err;
    trace->good = good;
    trace->b_hat = b_hat;
    trace->early_termination = !b_hat;
    trace->chose_h1 = false;
  }
  if (!b_hat) return h0;

  const std::size_t bh = *b_hat;
  MajorityPredictor h1;
  for (auto& g : gs[bh - 1]) h1.voters.push_back(TermPredictor{std::move(g), S2, cfg.partial});
  Predictor ph1(std::move(h1));
  std::size_t e1 = count_errors(ph1, S3);
  std::size_t e0 = count_errors(h0, S3);
  bool pick1 = static_cast<double>(e1) / md <=
               static_cast<double>(e0) / md + deviation_threshold(ThresholdKind::vcl_final, nd, 0);
  if (trace) {
    trace->chose_h1 = pick1;
    trace->s3_errors_h1 = e1;
    trace->s3_errors_h0 = e0;
  }
  if (pick1) return ph1;
  return h0;
}

}  // namespace urates
