#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dimensions.hpp"

namespace urates {

struct SoaBudgets {
  std::size_t depth_budget = 16;
  std::size_t domain_budget = 16;
};

struct SoaDecision {
  Label label = 0;
  bool off_manifold = false;
};

// Standard optimal algorithm over a fixed finite domain. Version spaces are
// subsets of the hypothesis table; predictions are memoized per version space.
class SoaEngine {
 public:
  struct State {
    HypSet v;
    LabeledSample history;
    bool off_manifold = false;
    std::size_t mistakes = 0;
  };

  SoaEngine(const ConceptClass& c, std::vector<Code> domain, std::size_t depth_budget)
      : table_(c, std::move(domain)), ld_(table_, static_cast<int>(depth_budget)) {}

  const HypothesisTable& table() const { return table_; }
  int ldim(const HypSet& v) { return ld_(v); }

  SoaDecision decide(const HypSet& v, std::size_t point) {
    HypSet one = table_.restrict(v, point, 1);
    HypSet zero = table_.restrict(v, point, 0);
    bool c1 = one.any(), c0 = zero.any();
    if (!c0 && !c1) return {0, true};
    if (!c0) return {1, false};
    if (!c1) return {0, false};
    return {static_cast<Label>(ld_(one) >= ld_(zero) ? 1 : 0), false};
  }

  Label predict(const HypSet& v, std::size_t point) {
    auto& row = memo_[v];
    if (row.empty()) row.assign(table_.points(), -1);
    if (row[point] < 0) row[point] = static_cast<signed char>(decide(v, point).label);
    return static_cast<Label>(row[point]);
  }

  State start() { return State{table_.all(), {}, false, 0}; }

  // One conservative online step; returns the updated version space only.
  HypSet step(const HypSet& v, std::size_t point, Label y, bool& off_manifold, std::size_t& mistakes) {
    if (predict(v, point) == y) return v;
    HypSet next = table_.restrict(v, point, y);
    if (next.none()) {
      off_manifold = true;
      return v;
    }
    ++mistakes;
    return next;
  }

  State train(const LabeledSample& batch) {
    State s = start();
    for (const auto& e : batch) {
      std::size_t p = table_.require_index(e.x);
      std::size_t before = s.mistakes;
      s.v = step(s.v, p, e.y, s.off_manifold, s.mistakes);
      if (s.mistakes != before) s.history.push_back(e);
    }
    return s;
  }

 private:
  HypothesisTable table_;
  LittlestoneSolver ld_;
  std::unordered_map<HypSet, std::vector<signed char>, HypSetHash> memo_;
};

inline std::vector<Code> soa_domain(const ConceptClass& c, std::size_t domain_budget, const std::vector<Code>& extra) {
  std::vector<Code> d = c.domain_prefix(domain_budget);
  d.insert(d.end(), extra.begin(), extra.end());
  return sorted_unique(std::move(d));
}

struct SoaPredictor {
  ClassPtr cls;
  LabeledSample history;
  std::vector<Code> domain;
  SoaBudgets budgets;
  bool off_manifold = false;
  std::size_t mistakes = 0;
  // predictions on `domain`, filled by the trainer
  std::vector<Label> table;

  Label operator()(Code x) const;
};

inline SoaDecision soa_decide(const SoaPredictor& p, Code x, std::size_t depth_budget, std::size_t domain_budget) {
  std::vector<Code> extra = p.domain;
  for (const auto& e : p.history) extra.push_back(e.x);
  extra.push_back(x);
  SoaEngine eng(*p.cls, soa_domain(*p.cls, domain_budget, extra), depth_budget);
  HypSet v = eng.table().consistent(p.history);
  return eng.decide(v, eng.table().require_index(x));
}

inline Label soa_predict(const SoaPredictor& p, Code x, std::size_t depth_budget, std::size_t domain_budget) {
  return soa_decide(p, x, depth_budget, domain_budget).label;
}

inline Label SoaPredictor::operator()(Code x) const {
  if (!table.empty()) {
    auto it = std::lower_bound(domain.begin(), domain.end(), x);
    if (it != domain.end() && *it == x) return table[static_cast<std::size_t>(it - domain.begin())];
  }
  return soa_predict(*this, x, budgets.depth_budget, budgets.domain_budget);
}

inline SoaPredictor make_soa_predictor(ClassPtr cls, SoaEngine& eng, const SoaEngine::State& s,
                                       const SoaBudgets& budgets) {
  SoaPredictor p;
  p.cls = std::move(cls);
  p.history = s.history;
  p.domain = eng.table().domain();
  p.budgets = budgets;
  p.off_manifold = s.off_manifold;
  p.mistakes = s.mistakes;
  p.table.resize(p.domain.size());
  for (std::size_t i = 0; i < p.domain.size(); ++i) p.table[i] = eng.predict(s.v, i);
  return p;
}

inline SoaPredictor alg_soa_train(ClassPtr cls, const LabeledSample& batch, const SoaBudgets& budgets = {},
                                  const std::vector<Code>& extra_domain = {}) {
  std::vector<Code> extra = extra_domain;
  for (const auto& e : batch) extra.push_back(e.x);
  SoaEngine eng(*cls, soa_domain(*cls, budgets.domain_budget, extra), budgets.depth_budget);
  auto s = eng.train(batch);
  return make_soa_predictor(std::move(cls), eng, s, budgets);
}

// min(VC + 1, b), with VC computed at point budget b + 1.
inline std::size_t vcl_k(const ConceptClass& c, const LabeledSample& batch) {
  const std::size_t b = batch.size();
  if (b < 1) throw DomainError("batch must be nonempty");
  DimResult vc = vc_dimension(c, b + 1);
  if (vc.saturated) throw DomainError("class too rich for batch size " + std::to_string(b));
  return std::min(vc.value + 1, b);
}

// Forbidden-pattern function of arity k. Either derived from a class (the
// lexicographically least labeling the class cannot produce) or given directly.
struct ForbiddenPatternFn {
  using Custom = std::function<std::optional<Pattern>(const std::vector<Code>&)>;

  ClassPtr cls;
  std::size_t k = 1;
  LabeledSample batch;
  Custom custom;
  // components with equal nonempty keys are the same function
  std::string key;

  static ForbiddenPatternFn from_class(ClassPtr cls, std::size_t k, LabeledSample batch) {
    ForbiddenPatternFn f;
    f.cls = std::move(cls);
    f.k = k;
    f.batch = std::move(batch);
    f.key = "vcl:" + std::to_string(f.k);
    return f;
  }

  static ForbiddenPatternFn explicit_fn(ClassPtr cls, std::size_t k, Custom fn) {
    ForbiddenPatternFn f;
    f.cls = std::move(cls);
    f.k = k;
    f.custom = std::move(fn);
    return f;
  }
};

inline std::optional<Pattern> vcl_forbidden(const ForbiddenPatternFn& f, const std::vector<Code>& xs) {
  if (xs.size() != f.k) throw DomainError("vcl_forbidden expects exactly k points");
  if (f.custom) return f.custom(xs);
  auto proj = project(*f.cls, xs);
  const std::size_t k = xs.size();
  std::size_t j = 0;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << k); ++code) {
    Pattern p(k);
    for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<Label>((code >> (k - 1 - i)) & 1U);
    if (j < proj.size() && proj[j] == p) {
      ++j;
      continue;
    }
    return p;
  }
  return std::nullopt;
}

}  // namespace urates
