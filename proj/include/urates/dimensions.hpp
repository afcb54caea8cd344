#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "concept_class.hpp"

namespace urates {

// A dimension computed under a budget. `saturated` means the budget was reached,
// so the true value may be larger.
struct DimResult {
  std::size_t value = 0;
  bool saturated = false;
  bool operator==(const DimResult&) const = default;
};

// Calls fn(indices) for every k-subset of {0..n-1} in lexicographic order until fn returns true.
template <class Fn>
bool for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return false;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (fn(static_cast<const std::vector<std::size_t>&>(idx))) return true;
    if (k == 0) return false;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Littlestone dimension of subsets of a hypothesis table, capped at `cap`, memoized.
// Empty set has dimension -1.
class LittlestoneSolver {
 public:
  LittlestoneSolver(const HypothesisTable& t, int cap) : t_(&t), cap_(cap) {}

  int cap() const { return cap_; }
  const HypothesisTable& table() const { return *t_; }

  int operator()(const HypSet& v) {
    std::size_t n = v.count();
    if (n == 0) return -1;
    if (n == 1 || cap_ == 0) return 0;
    auto it = memo_.find(v);
    if (it != memo_.end()) return it->second;
    const int ub = std::min(cap_, floor_log2(n));
    int best = 0;
    for (std::size_t p = 0; p < t_->points() && best < ub; ++p) {
      HypSet one = v & t_->ones(p);
      std::size_t n1 = one.count();
      if (n1 == 0 || n1 == n) continue;
      HypSet zero = v;
      zero.and_not(t_->ones(p));
      const HypSet& small = n1 <= n - n1 ? one : zero;
      const HypSet& large = n1 <= n - n1 ? zero : one;
      if (1 + floor_log2(small.count()) <= best) continue;
      int a = (*this)(small);
      if (1 + a <= best) continue;
      int b = (*this)(large);
      best = std::max(best, 1 + std::min(a, b));
    }
    best = std::min(best, cap_);
    memo_.emplace(v, best);
    return best;
  }

 private:
  const HypothesisTable* t_;
  int cap_;
  std::unordered_map<HypSet, int, HypSetHash> memo_;
};

inline std::vector<Code> vc_search_domain(const ConceptClass& c, std::size_t point_budget) {
  if (c.finite_domain()) return c.full_domain();
  return c.domain_prefix(std::max<std::size_t>(point_budget, 8));
}

namespace detail {

inline bool shattered(const HypothesisTable& t, const HypSet& v, const std::vector<std::size_t>& pts) {
  const std::size_t d = pts.size();
  if (v.count() < (std::size_t{1} << d)) return false;
  std::vector<char> hit(std::size_t{1} << d, 0);
  std::size_t seen = 0;
  for (std::size_t r = v.first(); r < v.size(); r = v.next(r)) {
    std::size_t key = 0;
    for (std::size_t i = 0; i < d; ++i) key = (key << 1) | t.label(r, pts[i]);
    if (!hit[key]) {
      hit[key] = 1;
      if (++seen == hit.size()) return true;
    }
  }
  return false;
}

}  // namespace detail

// Largest d <= point_budget such that some d points of the search domain are shattered.
inline DimResult vc_dimension(const ConceptClass& c, std::size_t point_budget) {
  if (point_budget < 1) throw DomainError("point budget must be >= 1");
  if (point_budget > 24) throw BudgetError("vc point budget too large");
  HypothesisTable t(c, vc_search_domain(c, point_budget));
  HypSet all = t.all();
  std::size_t d = 0;
  for (std::size_t k = 1; k <= point_budget; ++k) {
    bool found = for_each_combination(t.points(), k, [&](const std::vector<std::size_t>& idx) {
      return detail::shattered(t, all, idx);
    });
    if (!found) break;
    d = k;
  }
  return {d, d == point_budget};
}

// Perfect binary tree of points; node u in {0,1}^k sits at index 2^k - 1 + value(u)
// with u's first label as the most significant bit. Children of i are 2i+1 (label 0)
// and 2i+2 (label 1).
struct LittlestoneTree {
  std::size_t depth = 0;
  std::vector<Code> nodes;

  Code at(const std::vector<Label>& path) const {
    std::size_t i = 0;
    for (Label y : path) i = 2 * i + 1 + y;
    return nodes.at(i);
  }

  // Labeled path for a branch; branch.size() must equal depth.
  LabeledSample path(const std::vector<Label>& branch) const {
    LabeledSample s;
    std::size_t i = 0;
    for (Label y : branch) {
      s.push_back({nodes.at(i), y});
      i = 2 * i + 1 + y;
    }
    return s;
  }
};

struct LittlestoneSearch {
  bool shattered = false;
  LittlestoneTree tree;
};

namespace detail {

inline void build_littlestone(const HypothesisTable& t, LittlestoneSolver& ld, const HypSet& v, int d,
                              std::size_t idx, LittlestoneTree& out) {
  if (d == 0) return;
  for (std::size_t p = 0; p < t.points(); ++p) {
    HypSet zero = t.restrict(v, p, 0);
    HypSet one = t.restrict(v, p, 1);
    if (ld(zero) >= d - 1 && ld(one) >= d - 1) {
      out.nodes[idx] = t.domain()[p];
      build_littlestone(t, ld, zero, d - 1, 2 * idx + 1, out);
      build_littlestone(t, ld, one, d - 1, 2 * idx + 2, out);
      return;
    }
  }
  throw Error("littlestone tree construction inconsistent with solver");
}

}  // namespace detail

inline LittlestoneSearch shatters_littlestone_tree(const ConceptClass& c, std::size_t depth,
                                                   std::size_t domain_budget) {
  if (depth < 1) throw DomainError("depth must be >= 1");
  if (depth > 30) throw BudgetError("littlestone tree depth too large");
  HypothesisTable t(c, c.domain_prefix(domain_budget));
  LittlestoneSolver ld(t, static_cast<int>(depth));
  LittlestoneSearch out;
  HypSet all = t.all();
  if (ld(all) < static_cast<int>(depth)) return out;
  out.shattered = true;
  out.tree.depth = depth;
  out.tree.nodes.assign((std::size_t{1} << depth) - 1, 0);
  detail::build_littlestone(t, ld, all, static_cast<int>(depth), 0, out.tree);
  return out;
}

inline DimResult littlestone_dimension(const ConceptClass& c, std::size_t depth_budget, std::size_t domain_budget) {
  if (depth_budget < 1 || domain_budget < 1) throw DomainError("budgets must be >= 1");
  HypothesisTable t(c, c.domain_prefix(domain_budget));
  LittlestoneSolver ld(t, static_cast<int>(depth_budget));
  auto d = static_cast<std::size_t>(std::max(0, ld(t.all())));
  return {d, d == depth_budget};
}

// Node at level k holds k+1 points; children indexed by the labeling of those
// points read as a binary number, first point most significant.
struct VclNode {
  std::vector<Code> points;
  std::vector<VclNode> children;
};

struct VclSearch {
  bool shattered = false;
  std::size_t depth = 0;
  VclNode root;
};

namespace detail {

class VclSearcher {
 public:
  VclSearcher(const HypothesisTable& t, std::size_t depth) : t_(t), depth_(depth), memo_(depth + 1) {}

  bool feasible(const HypSet& v, std::size_t level) { return search(v, level, nullptr); }

  bool build(const HypSet& v, std::size_t level, VclNode& node) { return search(v, level, &node); }

 private:
  bool search(const HypSet& v, std::size_t level, VclNode* node) {
    if (v.none()) return false;
    if (level == depth_) return true;
    if (!node) {
      auto it = memo_[level].find(v);
      if (it != memo_[level].end()) return it->second;
    }
    const std::size_t w = level + 1;
    bool ok = false;
    if (w <= t_.points() && w < 63 && v.count() >= (std::size_t{1} << w)) {
      ok = for_each_combination(t_.points(), w, [&](const std::vector<std::size_t>& idx) {
        std::vector<HypSet> parts;
        parts.reserve(std::size_t{1} << w);
        for (std::size_t y = 0; y < (std::size_t{1} << w); ++y) {
          HypSet s = v;
          for (std::size_t i = 0; i < w; ++i) s = t_.restrict(std::move(s), idx[i], (y >> (w - 1 - i)) & 1U);
          if (!search(s, level + 1, nullptr)) return false;
          parts.push_back(std::move(s));
        }
        if (node) {
          node->points.clear();
          for (auto i : idx) node->points.push_back(t_.domain()[i]);
          node->children.assign(parts.size(), VclNode{});
          for (std::size_t y = 0; y < parts.size(); ++y) search(parts[y], level + 1, &node->children[y]);
        }
        return true;
      });
    }
    if (!node) memo_[level].emplace(v, ok);
    return ok;
  }

  const HypothesisTable& t_;
  std::size_t depth_;
  std::vector<std::unordered_map<HypSet, bool, HypSetHash>> memo_;
};

}  // namespace detail

inline VclSearch shatters_vcl_tree(const ConceptClass& c, std::size_t depth, std::size_t domain_budget) {
  if (depth < 1) throw DomainError("depth must be >= 1");
  HypothesisTable t(c, c.domain_prefix(domain_budget));
  detail::VclSearcher s(t, depth);
  VclSearch out;
  out.depth = depth;
  if (!s.feasible(t.all(), 0)) return out;
  out.shattered = s.build(t.all(), 0, out.root);
  return out;
}

struct EluderSequence {
  LabeledSample pairs;
  std::vector<HypId> witnesses;
};

class EluderError : public Error {
 public:
  EluderError(std::size_t max_length)
      : Error("eluder sequence unobtainable; max length " + std::to_string(max_length)), max_length(max_length) {}
  std::size_t max_length;
};

// Greedy construction: keep the prefix-consistent subclass as large as possible,
// taking the smallest-coded disagreement point and label 0 on size ties.
inline EluderSequence eluder_sequence(const ConceptClass& c, std::size_t length, std::size_t domain_budget) {
  if (length < 1) throw DomainError("length must be >= 1");
  EluderSequence out;
  auto candidates = c.domain_prefix(domain_budget);
  for (std::size_t i = 0; i < length; ++i) {
    bool placed = false;
    for (Code x : candidates) {
      LabeledSample s0 = out.pairs, s1 = out.pairs;
      s0.push_back({x, 0});
      s1.push_back({x, 1});
      Cardinality n0 = consistent_count(c, s0), n1 = consistent_count(c, s1);
      if (n0.empty() || n1.empty()) continue;
      Label y = n1 > n0 ? 1 : 0;
      auto witness = first_consistent(c, y ? s0 : s1);
      out.witnesses.push_back(*witness);
      out.pairs.push_back({x, y});
      placed = true;
      break;
    }
    if (!placed) throw EluderError(out.pairs.size());
  }
  return out;
}

}  // namespace urates
