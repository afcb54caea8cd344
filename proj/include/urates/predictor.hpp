#pragma once

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "partial.hpp"

namespace urates {

struct ConstantPredictor {
  Label value = 0;
};

struct HypothesisPredictor {
  ClassPtr cls;
  HypId id = 0;
};

struct MemorizedPredictor {
  std::map<Code, Label> table;
  Label fallback = 0;
};

struct TermPredictor {
  PartialClass g;
  LabeledSample sample;
  PartialBudgets budgets;
};

struct MajorityPredictor;

class Predictor {
 public:
  using Variant = std::variant<ConstantPredictor, HypothesisPredictor, MemorizedPredictor, SoaPredictor, TermPredictor,
                               std::shared_ptr<const MajorityPredictor>>;

  Predictor() : v_(ConstantPredictor{}) {}
  Predictor(ConstantPredictor p) : v_(std::move(p)) {}
  Predictor(HypothesisPredictor p) : v_(std::move(p)) {}
  Predictor(MemorizedPredictor p) : v_(std::move(p)) {}
  Predictor(SoaPredictor p) : v_(std::move(p)) {}
  Predictor(TermPredictor p) : v_(std::move(p)) {}
  Predictor(MajorityPredictor p);

  Label operator()(Code x) const;

  std::string kind() const;
  const Variant& variant() const { return v_; }

  template <class T>
  const T* get() const {
    return std::get_if<T>(&v_);
  }
  const MajorityPredictor* majority() const {
    auto p = std::get_if<std::shared_ptr<const MajorityPredictor>>(&v_);
    return p ? p->get() : nullptr;
  }

  nlohmann::ordered_json to_json() const;
  std::string dump() const { return to_json().dump(); }

 private:
  Variant v_;
};

// Predicts 1 when at least half of the voters predict 1.
struct MajorityPredictor {
  std::vector<Predictor> voters;

  std::size_t ones(Code x) const {
    std::size_t n = 0;
    for (const auto& v : voters) n += v(x);
    return n;
  }
  Label operator()(Code x) const { return 2 * ones(x) >= voters.size() ? 1 : 0; }
};

inline Predictor::Predictor(MajorityPredictor p) : v_(std::make_shared<const MajorityPredictor>(std::move(p))) {}

inline Label Predictor::operator()(Code x) const {
  struct Visit {
    Code x;
    Label operator()(const ConstantPredictor& p) const { return p.value; }
    Label operator()(const HypothesisPredictor& p) const { return p.cls->evaluate(p.id, x); }
    Label operator()(const MemorizedPredictor& p) const {
      auto it = p.table.find(x);
      return it == p.table.end() ? p.fallback : it->second;
    }
    Label operator()(const SoaPredictor& p) const { return p(x); }
    Label operator()(const TermPredictor& p) const { return term_predict(p.g, p.sample, x, p.budgets); }
    Label operator()(const std::shared_ptr<const MajorityPredictor>& p) const { return (*p)(x); }
  };
  return std::visit(Visit{x}, v_);
}

inline std::string Predictor::kind() const {
  switch (v_.index()) {
    case 0: return "constant";
    case 1: return "hypothesis";
    case 2: return "memorized";
    case 3: return "soa";
    case 4: return "term";
    default: return "majority";
  }
}

namespace detail {

inline nlohmann::ordered_json sample_json(const LabeledSample& s) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& e : s) a.push_back({e.x, static_cast<int>(e.y)});
  return a;
}

template <class Json>
LabeledSample sample_from_json(const Json& j) {
  LabeledSample s;
  for (const auto& e : j) s.push_back({e.at(0).template get<Code>(), static_cast<Label>(e.at(1).template get<int>())});
  return s;
}

}  // namespace detail

inline nlohmann::ordered_json Predictor::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind();
  if (auto p = get<ConstantPredictor>()) {
    j["value"] = static_cast<int>(p->value);
  } else if (auto p = get<HypothesisPredictor>()) {
    j["class"] = p->cls->to_json();
    j["id"] = p->id;
  } else if (auto p = get<MemorizedPredictor>()) {
    auto t = nlohmann::ordered_json::array();
    for (const auto& [x, y] : p->table) t.push_back({x, static_cast<int>(y)});
    j["table"] = t;
    j["default"] = static_cast<int>(p->fallback);
  } else if (auto p = get<SoaPredictor>()) {
    j["class"] = p->cls->to_json();
    j["history"] = detail::sample_json(p->history);
    j["domain"] = p->domain;
    j["depth_budget"] = p->budgets.depth_budget;
    j["domain_budget"] = p->budgets.domain_budget;
    j["off_manifold"] = p->off_manifold;
    j["mistakes"] = p->mistakes;
  } else if (auto p = get<TermPredictor>()) {
    j["class"] = p->g.base().to_json();
    auto comps = nlohmann::ordered_json::array();
    for (const auto& c : p->g.components) {
      if (c.custom) throw DomainError("explicit forbidden-pattern components are not serializable");
      nlohmann::ordered_json o;
      o["k"] = c.k;
      o["batch"] = detail::sample_json(c.batch);
      comps.push_back(o);
    }
    j["components"] = comps;
    j["sample"] = detail::sample_json(p->sample);
  } else if (auto p = majority()) {
    auto v = nlohmann::ordered_json::array();
    for (const auto& q : p->voters) v.push_back(q.to_json());
    j["voters"] = v;
  }
  return j;
}

template <class Json>
Predictor predictor_from_json(const Json& j) {
  std::string kind = j.at("kind").template get<std::string>();
  if (kind == "constant") return ConstantPredictor{static_cast<Label>(j.at("value").template get<int>())};
  if (kind == "hypothesis")
    return HypothesisPredictor{share(ConceptClass::from_json(j.at("class"))), j.at("id").template get<HypId>()};
  if (kind == "memorized") {
    MemorizedPredictor p;
    for (const auto& e : j.at("table"))
      p.table[e.at(0).template get<Code>()] = static_cast<Label>(e.at(1).template get<int>());
    p.fallback = static_cast<Label>(j.at("default").template get<int>());
    return p;
  }
  if (kind == "soa") {
    SoaPredictor p;
    p.cls = share(ConceptClass::from_json(j.at("class")));
    p.history = detail::sample_from_json(j.at("history"));
    p.domain = j.at("domain").template get<std::vector<Code>>();
    p.budgets.depth_budget = j.at("depth_budget").template get<std::size_t>();
    p.budgets.domain_budget = j.at("domain_budget").template get<std::size_t>();
    p.off_manifold = j.at("off_manifold").template get<bool>();
    p.mistakes = j.at("mistakes").template get<std::size_t>();
    return p;
  }
  if (kind == "term") {
    TermPredictor p;
    auto cls = share(ConceptClass::from_json(j.at("class")));
    for (const auto& o : j.at("components"))
      p.g.components.push_back(ForbiddenPatternFn::from_class(cls, o.at("k").template get<std::size_t>(),
                                                              detail::sample_from_json(o.at("batch"))));
    p.sample = detail::sample_from_json(j.at("sample"));
    return p;
  }
  if (kind == "majority") {
    MajorityPredictor m;
    for (const auto& v : j.at("voters")) m.voters.push_back(predictor_from_json(v));
    return m;
  }
  throw DomainError("unknown predictor kind '" + kind + "'");
}

}  // namespace urates
