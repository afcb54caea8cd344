#pragma once

#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bounds.hpp"
#include "distribution.hpp"
#include "strategies.hpp"

namespace urates {

struct PartialBudgets {
  std::size_t max_points = 32;
  std::size_t max_k = 4;
  std::size_t max_b = 16;
  std::size_t max_patterns = std::size_t{1} << 20;
};

// Union over components of all partial concepts avoiding that component's
// forbidden patterns.
struct PartialClass {
  std::vector<ForbiddenPatternFn> components;

  const ConceptClass& base() const {
    if (components.empty() || !components.front().cls) throw DomainError("partial class has no components");
    return *components.front().cls;
  }

  // one index per distinct component function, in component order
  std::vector<std::size_t> distinct_components() const {
    std::vector<std::size_t> out;
    std::set<std::string> keys;
    for (std::size_t i = 0; i < components.size(); ++i) {
      const auto& key = components[i].key;
      if (key.empty() || keys.insert(key).second) out.push_back(i);
    }
    return out;
  }
};

inline PartialClass induce_partial_class(ClassPtr cls, const LabeledSample& batch, const PartialBudgets& budgets = {}) {
  const std::size_t b = batch.size();
  if (b < 1) throw DomainError("batch must be nonempty");
  if (b > budgets.max_b) throw BudgetError("batch size " + std::to_string(b) + " exceeds relabeling budget");
  const std::size_t k = vcl_k(*cls, batch);
  PartialClass g;
  g.components.reserve(std::size_t{1} << b);
  for (std::uint64_t y = 0; y < (std::uint64_t{1} << b); ++y) {
    LabeledSample relabeled = batch;
    for (std::size_t t = 0; t < b; ++t) relabeled[t].y = static_cast<Label>((y >> (b - 1 - t)) & 1U);
    g.components.push_back(ForbiddenPatternFn::from_class(cls, k, std::move(relabeled)));
  }
  return g;
}

namespace detail {

// Depth-first search over labelings of a point tuple accepted by one component,
// visiting positions in the given order with label 0 before 1.
class ComponentSearch {
 public:
  ComponentSearch(const ForbiddenPatternFn& f, const std::vector<Code>& codes, const PartialBudgets& budgets)
      : f_(f), codes_(codes), distinct_(sorted_unique(codes)) {
    if (codes.size() > budgets.max_points)
      throw BudgetError("transductive point count " + std::to_string(codes.size()) + " exceeds budget");
    if (f.k < 1 || f.k > budgets.max_k) throw BudgetError("pattern arity " + std::to_string(f.k) + " exceeds budget");
    did_.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
      did_[i] = static_cast<std::size_t>(std::lower_bound(distinct_.begin(), distinct_.end(), codes[i]) -
                                         distinct_.begin());
    label_.assign(distinct_.size(), -1);
    cur_.bits.assign(codes.size(), 0);
  }

  template <class Fn>
  void enumerate(Fn&& emit) {
    walk_all(0, emit);
  }

  // Labeling minimizing disagreements with `target` (-1 = unlabeled), ties to the
  // first one in search order.
  std::optional<std::pair<std::size_t, Pattern>> best(const std::vector<int>& target) {
    target_ = &target;
    found_ = false;
    walk_best(0, 0);
    if (!found_) return std::nullopt;
    return std::make_pair(best_cost_, best_);
  }

 private:
  int forbidden_code(const std::vector<std::size_t>& idx) {
    std::uint64_t key = 0;
    for (auto i : idx) key = (key << 6) | (i + 1);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<Code> xs;
    for (auto i : idx) xs.push_back(distinct_[i]);
    auto p = vcl_forbidden(f_, xs);
    int code = -1;
    if (p) {
      if (p->size() != idx.size()) throw DomainError("forbidden pattern has wrong length");
      code = 0;
      for (std::size_t i = 0; i < p->size(); ++i) code = (code << 1) | (*p)[i];
    }
    memo_.emplace(key, code);
    return code;
  }

  bool allowed(std::size_t d, Label y) {
    const std::size_t k = f_.k;
    if (assigned_.size() + 1 < k) return true;
    std::vector<std::size_t> idx(k);
    bool bad = for_each_combination(assigned_.size(), k - 1, [&](const std::vector<std::size_t>& c) {
      for (std::size_t i = 0; i + 1 < k; ++i) idx[i] = assigned_[c[i]];
      idx[k - 1] = d;
      std::sort(idx.begin(), idx.end());
      int code = forbidden_code(idx);
      if (code < 0) return false;
      int mine = 0;
      for (auto i : idx) mine = (mine << 1) | (i == d ? y : label_[i]);
      return mine == code;
    });
    return !bad;
  }

  template <class Fn>
  void walk_all(std::size_t pos, Fn& emit) {
    if (pos == codes_.size()) {
      emit(static_cast<const Pattern&>(cur_));
      return;
    }
    std::size_t d = did_[pos];
    if (label_[d] >= 0) {
      cur_[pos] = static_cast<Label>(label_[d]);
      walk_all(pos + 1, emit);
      return;
    }
    for (Label y = 0; y < 2; ++y) {
      if (!allowed(d, y)) continue;
      label_[d] = y;
      assigned_.push_back(d);
      cur_[pos] = y;
      walk_all(pos + 1, emit);
      assigned_.pop_back();
      label_[d] = -1;
    }
  }

  void walk_best(std::size_t pos, std::size_t cost) {
    if (found_ && cost >= best_cost_) return;
    if (pos == codes_.size()) {
      found_ = true;
      best_cost_ = cost;
      best_ = cur_;
      return;
    }
    const int t = (*target_)[pos];
    std::size_t d = did_[pos];
    if (label_[d] >= 0) {
      Label y = static_cast<Label>(label_[d]);
      cur_[pos] = y;
      walk_best(pos + 1, cost + (t >= 0 && t != y));
      return;
    }
    for (Label y = 0; y < 2; ++y) {
      if (!allowed(d, y)) continue;
      label_[d] = y;
      assigned_.push_back(d);
      cur_[pos] = y;
      walk_best(pos + 1, cost + (t >= 0 && t != y));
      assigned_.pop_back();
      label_[d] = -1;
    }
  }

  const ForbiddenPatternFn& f_;
  std::vector<Code> codes_;
  std::vector<Code> distinct_;
  std::vector<std::size_t> did_;
  std::vector<int> label_;
  std::vector<std::size_t> assigned_;
  Pattern cur_;
  std::unordered_map<std::uint64_t, int> memo_;

  const std::vector<int>* target_ = nullptr;
  bool found_ = false;
  std::size_t best_cost_ = 0;
  Pattern best_;
};

inline std::optional<std::pair<std::size_t, Pattern>> best_over_components(const PartialClass& g,
                                                                            const std::vector<Code>& codes,
                                                                            const std::vector<int>& target,
                                                                            const PartialBudgets& budgets) {
  std::optional<std::pair<std::size_t, Pattern>> best;
  for (auto c : g.distinct_components()) {
    ComponentSearch s(g.components[c], codes, budgets);
    auto r = s.best(target);
    if (r && (!best || *r < *best)) best = std::move(r);
  }
  return best;
}

}  // namespace detail

inline std::vector<Pattern> partial_project(const PartialClass& g, const std::vector<Code>& xs,
                                            const PartialBudgets& budgets = {}) {
  if (xs.empty()) throw DomainError("partial_project needs at least one point");
  std::set<Pattern> out;
  for (auto c : g.distinct_components()) {
    detail::ComponentSearch s(g.components[c], xs, budgets);
    s.enumerate([&](const Pattern& p) {
      out.insert(p);
      if (out.size() > budgets.max_patterns) throw BudgetError("partial projection pattern budget exceeded");
    });
  }
  return {out.begin(), out.end()};
}

// Minimum number of disagreements with the sample's labels over partial_project(g, points).
inline std::optional<std::size_t> partial_min_error(const PartialClass& g, const LabeledSample& s,
                                                    const PartialBudgets& budgets = {}) {
  std::vector<int> target;
  for (const auto& e : s) target.push_back(e.y);
  auto r = detail::best_over_components(g, points_of(s), target, budgets);
  if (!r) return std::nullopt;
  return r->first;
}

// Transductive ERM. The suffix is put in ascending code order before the
// lexicographic tie-break, which makes the result invariant to suffix order.
inline Pattern term(const PartialClass& g, const LabeledSample& prefix, const std::vector<Code>& suffix,
                    const PartialBudgets& budgets = {}) {
  if (suffix.empty() || suffix.size() < prefix.size() || suffix.size() > prefix.size() + 1)
    throw DomainError("prefix/suffix lengths do not match a single sample size");
  const std::size_t P = prefix.size(), N = P + suffix.size();
  std::vector<std::size_t> order(suffix.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return suffix[a] < suffix[b]; });
  std::vector<Code> codes;
  std::vector<int> target;
  for (const auto& e : prefix) {
    codes.push_back(e.x);
    target.push_back(e.y);
  }
  for (auto i : order) {
    codes.push_back(suffix[i]);
    target.push_back(-1);
  }
  auto best = detail::best_over_components(g, codes, target, budgets);
  Pattern out(N, 0);
  if (!best) return out;
  for (std::size_t i = 0; i < P; ++i) out[i] = best->second[i];
  for (std::size_t j = 0; j < order.size(); ++j) out[P + order[j]] = best->second[P + j];
  return out;
}

inline Label term_predict(const PartialClass& g, const LabeledSample& s, Code x, const PartialBudgets& budgets = {}) {
  const std::size_t n = s.size();
  if (n < 1) throw DomainError("term_predict needs a nonempty sample");
  const std::size_t P = (n + 1) / 2;
  LabeledSample prefix(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(P));
  std::vector<Code> suffix;
  for (std::size_t i = P; i < n; ++i) suffix.push_back(s[i].x);
  suffix.push_back(x);
  return term(g, prefix, suffix, budgets).bits.back();
}

inline DimResult partial_vc_dimension(const PartialClass& g, std::size_t point_budget,
                                      const PartialBudgets& budgets = {}) {
  if (point_budget < 1) throw DomainError("point budget must be >= 1");
  if (point_budget > 20) throw BudgetError("partial vc point budget too large");
  auto domain = vc_search_domain(g.base(), point_budget);
  std::size_t d = 0;
  for (std::size_t k = 1; k <= point_budget; ++k) {
    bool found = for_each_combination(domain.size(), k, [&](const std::vector<std::size_t>& idx) {
      std::vector<Code> xs;
      for (auto i : idx) xs.push_back(domain[i]);
      return partial_project(g, xs, budgets).size() == (std::size_t{1} << k);
    });
    if (!found) break;
    d = k;
  }
  return {d, d == point_budget};
}

struct SemiEmpiricalDiagnostics {
  double epsilon_t = 0;
  double bar_sigma_sq = 1;
  std::size_t near_set = 0;
  std::size_t tight_set = 0;
  bool degenerate = false;
};

// sigma-bar squared: max(eps_t^2, max over g in G(c3 eps) of min over f in G(c4 eps^2)
// of the fraction of xs where f and g differ), or 1 when either set is empty.
inline SemiEmpiricalDiagnostics bar_sigma_diagnostic(const PartialClass& g, const DiscreteDistribution& dist,
                                                     const std::vector<Code>& xs, std::size_t vc, double c3,
                                                     double c4, const PartialBudgets& budgets = {}) {
  const std::size_t t = xs.size();
  if (t == 0) throw DomainError("bar_sigma_diagnostic needs realized points");
  std::vector<double> eta(t);
  for (std::size_t i = 0; i < t; ++i) {
    const Atom* a = dist.find(xs[i]);
    if (!a) throw DomainError("realized point " + std::to_string(xs[i]) + " is not an atom");
    eta[i] = a->eta;
  }
  auto semi = [&](const Pattern& p) {
    CompensatedSum s;
    for (std::size_t i = 0; i < t; ++i) s.add(p[i] ? 1.0 - eta[i] : eta[i]);
    return s.value() / static_cast<double>(t);
  };
  Pattern bayes(t);
  for (std::size_t i = 0; i < t; ++i) bayes[i] = eta[i] >= 0.5 ? 1 : 0;
  const double best = semi(bayes);

  SemiEmpiricalDiagnostics out;
  out.epsilon_t = epsilon_n(static_cast<double>(t), vc);
  const double eps = out.epsilon_t;
  auto pats = partial_project(g, xs, budgets);
  std::vector<const Pattern*> near, tight;
  for (const auto& p : pats) {
    double ex = semi(p) - best;
    if (ex <= c3 * eps) near.push_back(&p);
    if (ex <= c4 * eps * eps) tight.push_back(&p);
  }
  out.near_set = near.size();
  out.tight_set = tight.size();
  if (near.empty() || tight.empty()) {
    out.degenerate = true;
    out.bar_sigma_sq = 1.0;
    return out;
  }
  double worst = 0;
  for (const Pattern* a : near) {
    std::size_t closest = t;
    for (const Pattern* b : tight) {
      std::size_t diff = 0;
      for (std::size_t i = 0; i < t; ++i) diff += (*a)[i] != (*b)[i];
      closest = std::min(closest, diff);
    }
    worst = std::max(worst, static_cast<double>(closest) / static_cast<double>(t));
  }
  out.bar_sigma_sq = std::max(eps * eps, worst);
  return out;
}

inline SemiEmpiricalDiagnostics bar_sigma_diagnostic(const PartialClass& g, const DiscreteDistribution& dist,
                                                     const std::vector<Code>& xs, std::size_t vc,
                                                     const ConstantsTable& k = ConstantsTable{}) {
  return bar_sigma_diagnostic(g, dist, xs, vc, k.c3, k.c4);
}

}  // namespace urates
