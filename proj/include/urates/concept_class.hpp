#pragma once

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "core.hpp"

namespace urates {

enum class ClassKind { finite_table, threshold_nat, threshold_grid, all_functions_grid, singletons_nat };

inline const char* kind_name(ClassKind k) {
  switch (k) {
    case ClassKind::finite_table: return "finite_table";
    case ClassKind::threshold_nat: return "threshold_nat";
    case ClassKind::threshold_grid: return "threshold_grid";
    case ClassKind::all_functions_grid: return "all_functions_grid";
    case ClassKind::singletons_nat: return "singletons_nat";
  }
  return "?";
}

// A family of binary hypotheses over integer-coded points.
//
//   threshold_nat       x -> 1[x >= a], a >= 1, domain {1,2,...}; hyp id = a
//   singletons_nat      x -> 1[x == a], a >= 1, domain {1,2,...}; hyp id = a
//   threshold_grid m    x -> 1[x >= a], a in 1..m+1, domain 1..m; hyp id = a
//   all_functions_grid  every function on 1..m; hyp id = bitmask, bit x-1
//   finite_table        explicit rows over an explicit domain; hyp id = row
class ConceptClass {
 public:
  static ConceptClass threshold_nat() { return ConceptClass(ClassKind::threshold_nat); }
  static ConceptClass singletons_nat() { return ConceptClass(ClassKind::singletons_nat); }

  static ConceptClass threshold_grid(std::uint64_t m) {
    if (m < 1) throw DomainError("threshold_grid needs m >= 1");
    ConceptClass c(ClassKind::threshold_grid);
    c.m_ = m;
    return c;
  }

  static ConceptClass all_functions_grid(std::uint64_t m) {
    if (m < 1 || m > 63) throw DomainError("all_functions_grid needs 1 <= m <= 63");
    ConceptClass c(ClassKind::all_functions_grid);
    c.m_ = m;
    return c;
  }

  static ConceptClass finite_table(std::vector<Code> domain, const std::vector<std::vector<int>>& hyps) {
    if (domain.empty()) throw DomainError("finite_table needs a nonempty domain");
    if (hyps.empty()) throw DomainError("finite_table needs at least one hypothesis");
    std::vector<std::size_t> order(domain.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return domain[a] < domain[b]; });
    ConceptClass c(ClassKind::finite_table);
    for (std::size_t i = 0; i < order.size(); ++i) {
      c.domain_.push_back(domain[order[i]]);
      if (i > 0 && c.domain_[i] == c.domain_[i - 1]) throw DomainError("finite_table domain has duplicate codes");
    }
    std::set<Pattern> seen;
    for (const auto& row : hyps) {
      if (row.size() != domain.size()) throw DomainError("finite_table row length differs from domain size");
      Pattern p(row.size());
      for (std::size_t i = 0; i < order.size(); ++i) {
        int v = row[order[i]];
        if (v != 0 && v != 1) throw DomainError("finite_table labels must be 0 or 1");
        p[i] = static_cast<Label>(v);
      }
      if (!seen.insert(p).second) throw DomainError("finite_table has duplicate hypothesis rows");
      c.rows_.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < c.domain_.size(); ++i) c.column_[c.domain_[i]] = i;
    return c;
  }

  ClassKind kind() const { return kind_; }
  std::uint64_t m() const { return m_; }
  const std::vector<Pattern>& rows() const { return rows_; }

  bool finite_domain() const {
    return kind_ == ClassKind::finite_table || kind_ == ClassKind::threshold_grid ||
           kind_ == ClassKind::all_functions_grid;
  }

  bool finite() const { return finite_domain(); }

  std::uint64_t domain_size() const {
    switch (kind_) {
      case ClassKind::finite_table: return domain_.size();
      case ClassKind::threshold_grid:
      case ClassKind::all_functions_grid: return m_;
      default: throw DomainError("class has an infinite domain");
    }
  }

  bool in_domain(Code x) const {
    switch (kind_) {
      case ClassKind::finite_table: return column_.count(x) > 0;
      case ClassKind::threshold_grid:
      case ClassKind::all_functions_grid: return x >= 1 && x <= m_;
      default: return x >= 1;
    }
  }

  // First `budget` codes of the canonical (ascending) domain enumeration.
  std::vector<Code> domain_prefix(std::size_t budget) const {
    std::vector<Code> out;
    if (kind_ == ClassKind::finite_table) {
      for (std::size_t i = 0; i < domain_.size() && i < budget; ++i) out.push_back(domain_[i]);
      return out;
    }
    std::uint64_t top = budget;
    if (finite_domain()) top = std::min<std::uint64_t>(top, m_);
    for (Code x = 1; x <= top; ++x) out.push_back(x);
    return out;
  }

  std::vector<Code> full_domain() const { return domain_prefix(static_cast<std::size_t>(domain_size())); }

  bool valid_hypothesis(HypId h) const {
    switch (kind_) {
      case ClassKind::finite_table: return h < rows_.size();
      case ClassKind::threshold_grid: return h >= 1 && h <= m_ + 1;
      case ClassKind::all_functions_grid: return h < (std::uint64_t{1} << m_);
      default: return h >= 1;
    }
  }

  std::uint64_t hypothesis_count() const {
    switch (kind_) {
      case ClassKind::finite_table: return rows_.size();
      case ClassKind::threshold_grid: return m_ + 1;
      case ClassKind::all_functions_grid:
        if (m_ > 40) throw BudgetError("all_functions_grid too large to enumerate");
        return std::uint64_t{1} << m_;
      default: throw DomainError("class has infinitely many hypotheses");
    }
  }

  // Hypothesis ids in ascending order (finite classes only).
  std::vector<HypId> hypotheses(std::uint64_t max_count = std::uint64_t{1} << 22) const {
    std::uint64_t n = hypothesis_count();
    if (n > max_count) throw BudgetError("hypothesis enumeration budget exceeded");
    std::vector<HypId> out;
    HypId start = kind_ == ClassKind::threshold_grid ? 1 : 0;
    for (std::uint64_t k = 0; k < n; ++k) out.push_back(start + k);
    return out;
  }

  Label evaluate(HypId h, Code x) const {
    if (!valid_hypothesis(h)) throw DomainError("unknown hypothesis id " + std::to_string(h));
    if (!in_domain(x)) throw DomainError("point " + std::to_string(x) + " outside the class domain");
    switch (kind_) {
      case ClassKind::finite_table: return rows_[h][column_.at(x)];
      case ClassKind::threshold_nat:
      case ClassKind::threshold_grid: return x >= h ? 1 : 0;
      case ClassKind::singletons_nat: return x == h ? 1 : 0;
      case ClassKind::all_functions_grid: return static_cast<Label>((h >> (x - 1)) & 1U);
    }
    return 0;
  }

  std::size_t column(Code x) const { return column_.at(x); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(kind_);
    if (kind_ == ClassKind::threshold_grid || kind_ == ClassKind::all_functions_grid) j["m"] = m_;
    if (kind_ == ClassKind::finite_table) {
      j["domain"] = domain_;
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const auto& r : rows_) rows.push_back(std::vector<int>(r.bits.begin(), r.bits.end()));
      j["hyps"] = rows;
    }
    return j;
  }

  std::string dump() const { return to_json().dump(); }
  template <class Json>
  static ConceptClass from_json(const Json& j) {
    std::string kind = j.at("kind").template get<std::string>();
    if (kind == "threshold_nat") return threshold_nat();
    if (kind == "singletons_nat") return singletons_nat();
    if (kind == "threshold_grid") return threshold_grid(j.at("m").template get<std::uint64_t>());
    if (kind == "all_functions_grid") return all_functions_grid(j.at("m").template get<std::uint64_t>());
    if (kind == "finite_table")
      return finite_table(j.at("domain").template get<std::vector<Code>>(),
                          j.at("hyps").template get<std::vector<std::vector<int>>>());
    throw DomainError("unknown class kind '" + kind + "'");
  }

  static ConceptClass parse(const std::string& text) { return from_json(nlohmann::json::parse(text)); }

  bool operator==(const ConceptClass& o) const {
    return kind_ == o.kind_ && m_ == o.m_ && domain_ == o.domain_ && rows_ == o.rows_;
  }

 private:
  explicit ConceptClass(ClassKind k) : kind_(k) {}

  ClassKind kind_;
  std::uint64_t m_ = 0;
  std::vector<Code> domain_;
  std::vector<Pattern> rows_;
  std::map<Code, std::size_t> column_;
};

using ClassPtr = std::shared_ptr<const ConceptClass>;

inline ClassPtr share(ConceptClass c) { return std::make_shared<const ConceptClass>(std::move(c)); }

inline Label evaluate(const ConceptClass& c, HypId h, Code x) { return c.evaluate(h, x); }

// Number of hypotheses consistent with a sample; infinite counts compare above all finite ones.
struct Cardinality {
  bool infinite = false;
  std::uint64_t count = 0;

  bool empty() const { return !infinite && count == 0; }
  auto operator<=>(const Cardinality& o) const {
    if (infinite != o.infinite) return infinite <=> o.infinite;
    return count <=> o.count;
  }
  bool operator==(const Cardinality&) const = default;
};

namespace detail {

struct NatConstraints {
  bool conflict = false;
  std::set<Code> ones, zeros;
};

inline NatConstraints collect(const ConceptClass& c, const LabeledSample& s) {
  NatConstraints out;
  for (const auto& e : s) {
    if (!c.in_domain(e.x)) throw DomainError("point " + std::to_string(e.x) + " outside the class domain");
    (e.y ? out.ones : out.zeros).insert(e.x);
  }
  for (Code x : out.ones)
    if (out.zeros.count(x)) out.conflict = true;
  return out;
}

}  // namespace detail

inline Cardinality consistent_count(const ConceptClass& c, const LabeledSample& s) {
  auto k = detail::collect(c, s);
  if (k.conflict) return {};
  switch (c.kind()) {
    case ClassKind::threshold_nat:
    case ClassKind::threshold_grid: {
      std::uint64_t lo = k.zeros.empty() ? 1 : *k.zeros.rbegin() + 1;
      if (k.ones.empty() && c.kind() == ClassKind::threshold_nat) return {true, 0};
      std::uint64_t hi = k.ones.empty() ? c.m() + 1 : *k.ones.begin();
      if (lo > hi) return {};
      return {false, hi - lo + 1};
    }
    case ClassKind::singletons_nat: {
      if (k.ones.size() > 1) return {};
      if (k.ones.size() == 1) return {false, 1};
      return {true, 0};
    }
    case ClassKind::all_functions_grid: {
      std::uint64_t free = c.m() - (k.ones.size() + k.zeros.size());
      if (free >= 64) return {true, 0};
      return {false, std::uint64_t{1} << free};
    }
    case ClassKind::finite_table: {
      std::uint64_t n = 0;
      for (const auto& row : c.rows()) {
        bool ok = true;
        for (const auto& e : s)
          if (row[c.column(e.x)] != e.y) {
            ok = false;
            break;
          }
        n += ok;
      }
      return {false, n};
    }
  }
  return {};
}

// Smallest hypothesis id consistent with the sample.
inline std::optional<HypId> first_consistent(const ConceptClass& c, const LabeledSample& s) {
  auto k = detail::collect(c, s);
  if (k.conflict) return std::nullopt;
  switch (c.kind()) {
    case ClassKind::threshold_nat:
    case ClassKind::threshold_grid: {
      std::uint64_t lo = k.zeros.empty() ? 1 : *k.zeros.rbegin() + 1;
      std::uint64_t hi = k.ones.empty() ? ~std::uint64_t{0} : *k.ones.begin();
      if (c.kind() == ClassKind::threshold_grid) hi = std::min(hi, c.m() + 1);
      if (lo > hi) return std::nullopt;
      return lo;
    }
    case ClassKind::singletons_nat: {
      if (k.ones.size() > 1) return std::nullopt;
      if (k.ones.size() == 1) return *k.ones.begin();
      HypId a = 1;
      while (k.zeros.count(a)) ++a;
      return a;
    }
    case ClassKind::all_functions_grid: {
      HypId mask = 0;
      for (Code x : k.ones) mask |= HypId{1} << (x - 1);
      return mask;
    }
    case ClassKind::finite_table: {
      for (std::size_t r = 0; r < c.rows().size(); ++r) {
        bool ok = true;
        for (const auto& e : s)
          if (c.rows()[r][c.column(e.x)] != e.y) {
            ok = false;
            break;
          }
        if (ok) return r;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// Distinct behaviours of a class on a finite sorted point set, one row per pattern,
// rows ordered by their smallest representative hypothesis id.
class HypothesisTable {
 public:
  static constexpr std::size_t default_row_budget = std::size_t{1} << 20;

  HypothesisTable(const ConceptClass& c, std::vector<Code> points, std::size_t row_budget = default_row_budget)
      : domain_(sorted_unique(std::move(points))) {
    for (Code x : domain_)
      if (!c.in_domain(x)) throw DomainError("point " + std::to_string(x) + " outside the class domain");
    const std::size_t P = domain_.size();
    auto add = [&](const std::vector<Label>& labels, HypId rep) {
      if (reps_.size() >= row_budget) throw BudgetError("hypothesis table row budget exceeded");
      labels_.insert(labels_.end(), labels.begin(), labels.end());
      reps_.push_back(rep);
    };
    std::vector<Label> row(P, 0);
    switch (c.kind()) {
      case ClassKind::threshold_nat:
      case ClassKind::threshold_grid:
        for (std::size_t cut = 0; cut <= P; ++cut) {
          for (std::size_t p = 0; p < P; ++p) row[p] = p >= cut ? 1 : 0;
          add(row, cut == 0 ? 1 : domain_[cut - 1] + 1);
        }
        break;
      case ClassKind::singletons_nat: {
        HypId zero_rep = 1;
        for (Code x : domain_)
          if (x == zero_rep) ++zero_rep;
        std::vector<std::pair<HypId, std::size_t>> order;
        order.emplace_back(zero_rep, P);
        for (std::size_t p = 0; p < P; ++p) order.emplace_back(domain_[p], p);
        std::sort(order.begin(), order.end());
        for (auto [rep, hot] : order) {
          std::fill(row.begin(), row.end(), 0);
          if (hot < P) row[hot] = 1;
          add(row, rep);
        }
        break;
      }
      case ClassKind::all_functions_grid: {
        if (P >= 40 || (std::size_t{1} << P) > row_budget) throw BudgetError("hypothesis table row budget exceeded");
        for (std::uint64_t r = 0; r < (std::uint64_t{1} << P); ++r) {
          HypId mask = 0;
          for (std::size_t p = 0; p < P; ++p) {
            row[p] = static_cast<Label>((r >> p) & 1U);
            if (row[p]) mask |= HypId{1} << (domain_[p] - 1);
          }
          add(row, mask);
        }
        break;
      }
      case ClassKind::finite_table: {
        std::set<std::vector<Label>> seen;
        for (std::size_t h = 0; h < c.rows().size(); ++h) {
          for (std::size_t p = 0; p < P; ++p) row[p] = c.rows()[h][c.column(domain_[p])];
          if (seen.insert(row).second) add(row, h);
        }
        break;
      }
    }
    const std::size_t R = reps_.size();
    ones_.assign(P, HypSet(R));
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t p = 0; p < P; ++p)
        if (labels_[r * P + p]) ones_[p].set(r);
  }

  std::size_t rows() const { return reps_.size(); }
  std::size_t points() const { return domain_.size(); }
  const std::vector<Code>& domain() const { return domain_; }

  std::optional<std::size_t> index(Code x) const {
    auto it = std::lower_bound(domain_.begin(), domain_.end(), x);
    if (it == domain_.end() || *it != x) return std::nullopt;
    return static_cast<std::size_t>(it - domain_.begin());
  }

  std::size_t require_index(Code x) const {
    auto i = index(x);
    if (!i) throw DomainError("point " + std::to_string(x) + " missing from hypothesis table");
    return *i;
  }

  Label label(std::size_t row, std::size_t point) const { return labels_[row * domain_.size() + point]; }
  HypId representative(std::size_t row) const { return reps_[row]; }
  const HypSet& ones(std::size_t point) const { return ones_[point]; }
  HypSet all() const { return HypSet(rows(), true); }

  HypSet restrict(HypSet v, std::size_t point, Label y) const {
    if (y)
      v &= ones_[point];
    else
      v.and_not(ones_[point]);
    return v;
  }

  HypSet consistent(const LabeledSample& s) const {
    HypSet v = all();
    for (const auto& e : s) v = restrict(std::move(v), require_index(e.x), e.y);
    return v;
  }

 private:
  std::vector<Code> domain_;
  std::vector<Label> labels_;
  std::vector<HypId> reps_;
  std::vector<HypSet> ones_;
};

// All label patterns the class induces on xs, sorted and deduplicated.
inline std::vector<Pattern> project(const ConceptClass& c, const std::vector<Code>& xs) {
  HypothesisTable t(c, xs);
  std::vector<std::size_t> at(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) at[i] = t.require_index(xs[i]);
  std::set<Pattern> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    Pattern p(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) p[i] = t.label(r, at[i]);
    out.insert(std::move(p));
  }
  return {out.begin(), out.end()};
}

inline bool is_realizable(const ConceptClass& c, const LabeledSample& s) {
  return first_consistent(c, s).has_value();
}

}  // namespace urates
