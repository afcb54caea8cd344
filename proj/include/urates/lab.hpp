#pragma once

#include <boost/math/distributions/binomial.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adversary.hpp"
#include "learners.hpp"
#include "rng.hpp"

namespace urates {

inline std::size_t default_threads() {
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : h;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first exception
// (by index) is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t fail_at = count;
  std::exception_ptr fail;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < fail_at) {
            fail_at = i;
            fail = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (fail) std::rethrow_exception(fail);
}

// Pairwise sum with a fixed split at the midpoint.
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

struct CurvePoint {
  std::uint64_t n = 0;
  double mean_excess = 0;
  double stderr_ = 0;
  std::uint64_t reps = 0;
  double ci_tail = 0;
  bool operator==(const CurvePoint&) const = default;
};

struct CurveProvenance {
  std::string class_json;
  std::string dist_json;
  std::string learner;
  std::string cfg;
  std::uint64_t seed = 0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  CurveProvenance provenance;
};

inline std::string describe(const LearnerConfig& cfg) {
  std::ostringstream os;
  os << "psi=" << cfg.psi.str() << ";exp_b_cap=" << cfg.exp_b_cap << ";vcl_b_cap=" << cfg.vcl_b_cap
     << ";depth_budget=" << cfg.soa.depth_budget << ";domain_budget=" << cfg.soa.domain_budget
     << ";seed_policy=" << cfg.seed_policy;
  return os.str();
}

inline Predictor run_learner(const std::string& name, const ClassPtr& cls, const DiscreteDistribution& dist,
                             const LabeledSample& s, const LearnerConfig& cfg) {
  if (name == "erm") return erm_finite(cls, s);
  if (name == "exp") return exp_rate_learner(cls, s, cfg);
  if (name == "vclroot") return super_root_learner(cls, s, cfg);
  if (name == "baseline") return memorize_baseline(s);
  if (name == "bayes") return bayes_predictor(dist);
  throw DomainError("unknown learner '" + name + "'");
}

class ReplicationError : public Error {
 public:
  ReplicationError(std::uint64_t n, std::uint64_t rep, const std::string& what)
      : Error("replication (n=" + std::to_string(n) + ", rep=" + std::to_string(rep) + "): " + what), n(n), rep(rep) {}
  std::uint64_t n, rep;
};

// Excess risk of one replication; the sample comes from stream (seed, n, rep).
inline double replication_excess(const std::string& learner, const ClassPtr& cls, const DiscreteDistribution& dist,
                                 std::uint64_t n, std::uint64_t rep, std::uint64_t seed, const LearnerConfig& cfg,
                                 double optimum) {
  try {
    Rng rng(seed, n, rep);
    auto s = sample(dist, n, rng);
    auto h = run_learner(learner, cls, dist, s, cfg);
    return exact_error(dist, h).lo - optimum;
  } catch (const std::exception& e) {
    throw ReplicationError(n, rep, e.what());
  }
}

inline LearningCurve learning_curve(const std::string& learner, const ClassPtr& cls, const DiscreteDistribution& dist,
                                    const std::vector<std::uint64_t>& ns, std::uint64_t reps, std::uint64_t seed,
                                    const LearnerConfig& cfg = {}, std::size_t threads = default_threads()) {
  if (reps == 0) throw DomainError("reps must be positive");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw DomainError("sample sizes must be strictly increasing");
  dist.validate();
  const double optimum = class_optimal_error(dist, *cls).lo;
  LearningCurve curve;
  curve.provenance = {cls->dump(), dist.dump(), learner, describe(cfg), seed};
  for (std::uint64_t n : ns) {
    std::vector<double> v(reps);
    parallel_for(reps, threads,
                 [&](std::size_t r) { v[r] = replication_excess(learner, cls, dist, n, r, seed, cfg, optimum); });
    const double R = static_cast<double>(reps);
    const double mean = pairwise_sum(v) / R;
    std::vector<double> sq(reps);
    for (std::size_t r = 0; r < reps; ++r) sq[r] = (v[r] - mean) * (v[r] - mean);
    double se = reps > 1 ? std::sqrt(pairwise_sum(sq) / (R - 1)) / std::sqrt(R) : 0.0;
    curve.points.push_back({n, mean, se, reps, dist.tail_mass});
  }
  return curve;
}

inline constexpr const char* curve_csv_header = "n,mean_excess,stderr,reps,ci_tail";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string curve_to_csv(const LearningCurve& c) {
  std::string out = std::string(curve_csv_header) + "\n";
  for (const auto& p : c.points) {
    out += std::to_string(p.n) + "," + format_double(p.mean_excess) + "," + format_double(p.stderr_) + "," +
           std::to_string(p.reps) + "," + format_double(p.ci_tail) + "\n";
  }
  return out;
}

inline LearningCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("empty curve file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != curve_csv_header) throw DomainError("unexpected curve header '" + line + "'");
  LearningCurve c;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw DomainError("malformed curve row '" + line + "'");
    c.points.push_back({std::stoull(f[0]), std::stod(f[1]), std::stod(f[2]), std::stoull(f[3]), std::stod(f[4])});
  }
  return c;
}

enum class RateFamily { exponential, power };

inline const char* family_name(RateFamily f) { return f == RateFamily::exponential ? "exponential" : "power"; }

struct RateFit {
  RateFamily family = RateFamily::exponential;
  double a = 0, c = 0, r_squared = 0;
  std::size_t points = 0;
};

struct RateFitReport {
  RateFit exponential, power;
  RateFamily best = RateFamily::exponential;
  std::vector<double> diagnostic;  // sqrt(n) * mean_excess per point

  nlohmann::ordered_json to_json() const {
    auto fit = [](const RateFit& f) {
      nlohmann::ordered_json j;
      j["a"] = f.a;
      j["c"] = f.c;
      j["r_squared"] = f.r_squared;
      j["points"] = f.points;
      return j;
    };
    nlohmann::ordered_json j;
    j["exponential"] = fit(exponential);
    j["power"] = fit(power);
    j["best"] = family_name(best);
    j["sqrt_n_excess"] = diagnostic;
    return j;
  }
};

namespace detail {

// log y = a - c x by least squares
inline RateFit fit_line(RateFamily fam, const std::vector<double>& x, const std::vector<double>& ly) {
  const double N = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += ly[i];
  }
  mx /= N;
  my /= N;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit f;
  f.family = fam;
  f.points = x.size();
  double slope = sxx > 0 ? sxy / sxx : 0.0;
  f.c = -slope;
  f.a = my - slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = ly[i] - (f.a + slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace detail

inline RateFitReport fit_rate(const LearningCurve& curve) {
  std::vector<double> xn, xl, ly;
  RateFitReport out;
  for (const auto& p : curve.points) {
    double n = static_cast<double>(p.n);
    out.diagnostic.push_back(std::sqrt(n) * p.mean_excess);
    if (p.mean_excess > 0) {
      xn.push_back(n);
      xl.push_back(std::log(n));
      ly.push_back(std::log(p.mean_excess));
    }
  }
  if (ly.size() < 3) throw DomainError("rate fit needs at least 3 positive points");
  out.exponential = detail::fit_line(RateFamily::exponential, xn, ly);
  out.power = detail::fit_line(RateFamily::power, xl, ly);
  out.best = out.power.r_squared > out.exponential.r_squared ? RateFamily::power : RateFamily::exponential;
  return out;
}

struct AuditReport {
  std::uint64_t n = 0;
  std::uint64_t psi = 0;
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double failure_rate = 0;
  double ceiling = 0;           // e^-psi
  double upper_confidence = 0;  // one-sided 95% Clopper-Pearson bound on the failure probability
  double slack = 0;             // 3 sqrt(ceiling (1 - ceiling) / trials)
  std::uint64_t candidates = 0;
  bool within_slack = false;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n;
    j["psi"] = psi;
    j["trials"] = trials;
    j["failures"] = failures;
    j["failure_rate"] = failure_rate;
    j["ceiling"] = ceiling;
    j["upper_confidence_95"] = upper_confidence;
    j["slack_3sigma"] = slack;
    j["candidates_per_trial"] = candidates;
    j["within_slack"] = within_slack;
    return j;
  }
};

// Checks |er_S1(h) - er_P(h)| <= sqrt(3 (psi + b + ln n) / n) for every relabeled
// SOA candidate h of the near-exponential learner, per trial.
inline AuditReport audit_concentration(const ClassPtr& cls, const DiscreteDistribution& dist, std::uint64_t n,
                                       const PsiFn& psi, std::uint64_t trials, std::uint64_t seed,
                                       const LearnerConfig& cfg = {}, std::size_t threads = default_threads()) {
  if (trials == 0) throw DomainError("trials must be positive");
  if (n < 3) throw DomainError("audit needs n >= 3");
  dist.validate();
  const std::uint64_t nn = 3 * (n / 3), m = nn / 3;
  const std::uint64_t ps = psi(nn);
  const std::size_t b_max = std::min<std::size_t>(cfg.exp_b_cap, m);
  std::vector<char> failed(trials, 0);
  std::vector<std::uint64_t> cands(trials, 0);
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng rng(seed, n, t);
    auto s = sample(dist, n, rng);
    std::vector<Code> extra = points_of(s);
    SoaEngine eng(*cls, soa_domain(*cls, cfg.soa.domain_budget, extra), cfg.soa.depth_budget);
    auto idx = [&](Code x) { return eng.table().require_index(x); };
    std::vector<std::size_t> atom_at;
    for (const auto& a : dist.atoms) {
      auto i = eng.table().index(a.x);
      if (!i) throw DomainError("atom " + std::to_string(a.x) + " outside the SOA domain");
      atom_at.push_back(*i);
    }
    std::unordered_map<HypSet, double, HypSetHash> dev;
    bool bad = false;
    std::uint64_t count = 0;
    for (std::size_t b = 1; b <= b_max && !bad; ++b) {
      const double thr = std::sqrt(3.0 * (static_cast<double>(ps) + static_cast<double>(b) +
                                          std::log(static_cast<double>(nn))) /
                                   static_cast<double>(nn));
      for (std::size_t i = 1; i <= m / b && !bad; ++i) {
        std::vector<std::size_t> pts;
        for (std::size_t k = (i - 1) * b; k < i * b; ++k) pts.push_back(idx(s[k].x));
        detail::for_each_relabeling(eng, pts, [&](std::uint64_t, const HypSet& v) {
          ++count;
          auto it = dev.find(v);
          if (it == dev.end()) {
            std::size_t err = 0;
            for (std::size_t k = m; k < 2 * m; ++k) err += eng.predict(v, idx(s[k].x)) != s[k].y;
            CompensatedSum risk;
            for (std::size_t a = 0; a < dist.atoms.size(); ++a)
              risk.add(dist.atoms[a].p * atom_loss(dist.atoms[a], eng.predict(v, atom_at[a])));
            double d = std::fabs(static_cast<double>(err) / static_cast<double>(m) - risk.value());
            it = dev.emplace(v, d).first;
          }
          if (it->second > thr) bad = true;
        });
      }
    }
    failed[t] = bad;
    cands[t] = count;
  });
  AuditReport r;
  r.n = n;
  r.psi = ps;
  r.trials = trials;
  for (auto f : failed) r.failures += f;
  r.candidates = cands.front();
  r.failure_rate = static_cast<double>(r.failures) / static_cast<double>(trials);
  r.ceiling = std::exp(-static_cast<double>(ps));
  r.upper_confidence = boost::math::binomial_distribution<double>::find_upper_bound_on_p(
      static_cast<double>(trials), static_cast<double>(r.failures), 0.05);
  r.slack = 3.0 * std::sqrt(r.ceiling * (1.0 - r.ceiling) / static_cast<double>(trials));
  r.within_slack = r.failure_rate <= r.ceiling + r.slack;
  return r;
}

}  // namespace urates
