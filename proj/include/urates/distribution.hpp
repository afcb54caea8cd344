#pragma once

#include <json.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace urates {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0, comp_ = 0;
};

struct Atom {
  Code x = 0;
  double p = 0;
  double eta = 0;
  bool operator==(const Atom&) const = default;
};

struct DiscreteDistribution {
  std::vector<Atom> atoms;
  double tail_mass = 0;

  void validate(double tol = 1e-12) const {
    std::set<Code> seen;
    CompensatedSum s;
    for (const auto& a : atoms) {
      if (!(a.p > 0)) throw DomainError("atom masses must be positive");
      if (!(a.eta >= 0 && a.eta <= 1)) throw DomainError("eta must lie in [0,1]");
      if (!seen.insert(a.x).second) throw DomainError("atoms must have distinct points");
      s.add(a.p);
    }
    if (!(tail_mass >= 0)) throw DomainError("tail mass must be nonnegative");
    s.add(tail_mass);
    if (std::fabs(s.value() - 1.0) > tol) throw DomainError("masses do not sum to one");
  }

  const Atom* find(Code x) const {
    for (const auto& a : atoms)
      if (a.x == x) return &a;
    return nullptr;
  }

  std::vector<Code> points() const {
    std::vector<Code> xs;
    for (const auto& a : atoms) xs.push_back(a.x);
    return xs;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["atoms"] = nlohmann::ordered_json::array();
    for (const auto& a : atoms) {
      nlohmann::ordered_json o;
      o["x"] = a.x;
      o["p"] = a.p;
      o["eta"] = a.eta;
      j["atoms"].push_back(o);
    }
    j["tail_mass"] = tail_mass;
    return j;
  }

  std::string dump() const { return to_json().dump(); }

  template <class Json>
  static DiscreteDistribution from_json(const Json& j) {
    DiscreteDistribution d;
    for (const auto& o : j.at("atoms"))
      d.atoms.push_back({o.at("x").template get<Code>(), o.at("p").template get<double>(),
                         o.at("eta").template get<double>()});
    d.tail_mass = j.value("tail_mass", 0.0);
    d.validate();
    return d;
  }

  static DiscreteDistribution parse(const std::string& text) { return from_json(nlohmann::json::parse(text)); }
};

struct SampleStats {
  std::size_t tail_draws = 0;
};

// n i.i.d. draws by inverse CDF over the atoms; draws landing in the tail go to the last atom.
inline LabeledSample sample(const DiscreteDistribution& d, std::size_t n, Rng& rng, double tail_threshold = 1e-9,
                            SampleStats* stats = nullptr) {
  if (d.atoms.empty()) throw DomainError("distribution has no atoms");
  if (d.tail_mass > tail_threshold)
    throw DomainError("tail mass " + std::to_string(d.tail_mass) + " exceeds sampling threshold");
  std::vector<double> cum;
  CompensatedSum s;
  for (const auto& a : d.atoms) {
    s.add(a.p);
    cum.push_back(s.value());
  }
  LabeledSample out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    double u = rng.uniform();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cum.begin());
    if (i == d.atoms.size()) {
      i = d.atoms.size() - 1;
      if (stats) ++stats->tail_draws;
    }
    const Atom& a = d.atoms[i];
    out.push_back({a.x, static_cast<Label>(rng.bernoulli(a.eta) ? 1 : 0)});
  }
  return out;
}

}  // namespace urates
