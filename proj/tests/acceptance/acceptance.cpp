#include <CLI11.hpp>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "../common/reference_learners.hpp"
#include "urates.hpp"

using namespace urates;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Sauer-Shelah in the (e n / d)^d form; it only applies once n >= d.
bool within_sauer(std::size_t count, std::size_t n, std::size_t d, std::size_t distinct) {
  if (d == 0) return count <= 1;
  if (n < d) return count <= (std::size_t{1} << distinct);
  return static_cast<double>(count) <= std::pow(M_E * static_cast<double>(n) / static_cast<double>(d),
                                                static_cast<double>(d));
}

ConceptClass random_table(std::mt19937_64& rng, std::size_t points, std::size_t max_rows) {
  std::vector<Code> dom;
  for (std::size_t i = 0; i < points; ++i) dom.push_back(1 + i);
  std::set<std::vector<int>> rows;
  std::size_t want = 1 + rng() % max_rows;
  while (rows.size() < want && rows.size() < (std::size_t{1} << points)) {
    std::vector<int> r(points);
    for (auto& b : r) b = static_cast<int>(rng() & 1U);
    rows.insert(r);
  }
  return ConceptClass::finite_table(dom, {rows.begin(), rows.end()});
}

// ---------------------------------------------------------------------------

Verdict coin_lower_bound() {
  const double gamma = 1.0 / 6;
  std::size_t checked = 0;
  double worst = INFINITY;
  for (unsigned n = 5; n <= 30; ++n) {
    double nd = n;
    if (!(nd < (1 / (8 * gamma * gamma)) * (nd - std::log(8.0)))) continue;
    ++checked;
    double err = coin_test_bayes_error(gamma, n);
    double floor = std::exp(-nd);
    worst = std::min(worst, err / floor);
    if (!(err > floor)) return {false, fmt("n=%u: Bayes error %.17g <= e^-n %.17g", n, err, floor)};
  }
  return {checked > 0, fmt("%zu sizes, smallest error / e^-n ratio %.4g", checked, worst)};
}

Verdict soa_mistakes() {
  std::size_t classes = 0;
  for (std::size_t P = 1; P <= 4; ++P) {
    std::vector<Code> dom;
    for (std::size_t i = 0; i < P; ++i) dom.push_back(1 + i);
    const std::size_t total = std::size_t{1} << P;
    for (std::uint64_t pick = 1; pick < (std::uint64_t{1} << total); ++pick) {
      if (std::popcount(pick) > 8) continue;
      std::vector<std::vector<int>> rows;
      for (std::size_t r = 0; r < total; ++r)
        if (pick >> r & 1U) {
          std::vector<int> row(P);
          for (std::size_t p = 0; p < P; ++p) row[p] = static_cast<int>(r >> p & 1U);
          rows.push_back(row);
        }
      auto c = ConceptClass::finite_table(dom, rows);
      const std::size_t ld = littlestone_dimension(c, 8, P).value;
      SoaEngine eng(c, dom, 8);
      const auto& table = eng.table();
      const std::size_t R = table.rows();
      auto mask = [&](const HypSet& s) {
        std::uint32_t m = 0;
        for (std::size_t r = 0; r < R; ++r)
          if (s.test(r)) m |= 1U << r;
        return m;
      };
      std::unordered_map<std::uint64_t, std::size_t> memo;
      // most mistakes over realizable continuations of length `rem`
      std::function<std::size_t(const HypSet&, const HypSet&, std::size_t)> worst = [&](const HypSet& v,
                                                                                        const HypSet& cons,
                                                                                        std::size_t rem) {
        if (rem == 0) return std::size_t{0};
        std::uint64_t key = mask(v) | (std::uint64_t{mask(cons)} << 16) | (std::uint64_t{rem} << 32);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best = 0;
        for (std::size_t x = 0; x < P; ++x)
          for (Label y = 0; y < 2; ++y) {
            HypSet next_cons = table.restrict(cons, x, y);
            if (next_cons.none()) continue;
            bool off = false;
            std::size_t m = 0;
            HypSet next_v = eng.step(v, x, y, off, m);
            if (off) throw DomainError("realizable sequence left the class");
            best = std::max(best, m + worst(next_v, next_cons, rem - 1));
          }
        memo[key] = best;
        return best;
      };
      std::size_t most = worst(table.all(), table.all(), 5);
      ++classes;
      if (most > ld) return {false, fmt("class %zu points mask %llu: %zu mistakes > Ldim %zu", P,
                                        static_cast<unsigned long long>(pick), most, ld)};
    }
  }
  return {true, fmt("%zu classes, all sequences of length <= 5", classes)};
}

Verdict sauer() {
  std::mt19937_64 rng(31);
  std::size_t full = 0, partial = 0;
  double vc_ratio = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    ConceptClass c = ConceptClass::threshold_nat();
    switch (rng() % 5) {
      case 0: c = ConceptClass::threshold_nat(); break;
      case 1: c = ConceptClass::singletons_nat(); break;
      case 2: c = ConceptClass::threshold_grid(1 + rng() % 12); break;
      case 3: c = ConceptClass::all_functions_grid(1 + rng() % 4); break;
      default: c = random_table(rng, 2 + rng() % 5, 10); break;
    }
    auto dom = c.domain_prefix(14);
    std::size_t len = 1 + rng() % 12;
    std::vector<Code> xs(len);
    for (auto& x : xs) x = dom[rng() % dom.size()];
    const std::size_t distinct = sorted_unique(xs).size();
    const std::size_t d = vc_dimension(c, 13).value;
    const std::size_t count = project(c, xs).size();
    ++full;
    if (!within_sauer(count, len, d, distinct))
      return {false, fmt("draw %d: |project|=%zu exceeds bound for n=%zu d=%zu", draw, count, len, d)};

    std::size_t b = 1 + rng() % 3;
    if (d >= b || len < b) continue;
    LabeledSample batch;
    for (std::size_t t = 0; t < b; ++t) batch.push_back({xs[t], static_cast<Label>(rng() & 1U)});
    auto g = induce_partial_class(share(c), batch);
    auto pvc = partial_vc_dimension(g, 5 * b + 1);
    vc_ratio = std::max(vc_ratio, static_cast<double>(pvc.value) / static_cast<double>(b));
    if (pvc.value > 5 * b) return {false, fmt("draw %d: partial VC %zu > 5b with b=%zu", draw, pvc.value, b)};
    const std::size_t pcount = partial_project(g, xs).size();
    ++partial;
    if (!within_sauer(pcount, len, pvc.value, distinct))
      return {false, fmt("draw %d: |partial_project|=%zu exceeds bound for n=%zu d=%zu", draw, pcount, len, pvc.value)};
  }
  return {true, fmt("%zu class draws, %zu partial draws, max partial VC / b = %.3g", full, partial, vc_ratio)};
}

// Labelings of `codes` accepted by component f, tested directly from its forbidden patterns.
bool accepts(const ForbiddenPatternFn& f, const std::vector<Code>& codes, std::uint64_t val) {
  const std::size_t N = codes.size();
  auto bit = [&](std::size_t t) { return static_cast<Label>(val >> (N - 1 - t) & 1U); };
  std::vector<Code> distinct = sorted_unique(codes);
  std::vector<int> label(distinct.size(), -1);
  for (std::size_t t = 0; t < N; ++t) {
    auto j = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), codes[t]) - distinct.begin());
    if (label[j] >= 0 && label[j] != bit(t)) return false;
    label[j] = bit(t);
  }
  if (f.k > distinct.size()) return true;
  std::vector<bool> pick(distinct.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(f.k), true);
  do {
    std::vector<Code> sub;
    Pattern mine;
    for (std::size_t j = 0; j < distinct.size(); ++j)
      if (pick[j]) {
        sub.push_back(distinct[j]);
        mine.bits.push_back(static_cast<Label>(label[j]));
      }
    auto bad = vcl_forbidden(f, sub);
    if (bad && *bad == mine) return false;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return true;
}

Verdict term_equivalence() {
  std::mt19937_64 rng(47);
  std::size_t empty = 0;
  for (int inst = 0; inst < 500; ++inst) {
    ClassPtr base;
    switch (rng() % 3) {
      case 0: base = share(ConceptClass::threshold_nat()); break;
      case 1: base = share(ConceptClass::singletons_nat()); break;
      default: base = share(ConceptClass::threshold_grid(6)); break;
    }
    PartialClass g;
    std::size_t comps = 1 + rng() % 3;
    for (std::size_t c = 0; c < comps; ++c) {
      std::size_t k = 1 + rng() % 3;
      if (rng() % 2) {
        g.components.push_back(ForbiddenPatternFn::from_class(base, k, {}));
      } else {
        std::uint64_t salt = rng();
        g.components.push_back(ForbiddenPatternFn::explicit_fn(base, k, [k, salt](const std::vector<Code>& xs) {
          std::uint64_t h = salt;
          for (auto x : xs) h = splitmix64(h ^ x);
          std::uint64_t v = h % ((std::uint64_t{1} << k) + 1);
          if (v == (std::uint64_t{1} << k)) return std::optional<Pattern>{};
          Pattern p(k);
          for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<Label>(v >> (k - 1 - i) & 1U);
          return std::optional<Pattern>{p};
        }));
      }
    }
    std::size_t n = 1 + rng() % 9;
    LabeledSample s;
    for (std::size_t t = 0; t < n; ++t) s.push_back({1 + rng() % 6, static_cast<Label>(rng() & 1U)});
    Code x = 1 + rng() % 6;

    const std::size_t P = (n + 1) / 2;
    std::vector<Code> suffix;
    for (std::size_t t = P; t < n; ++t) suffix.push_back(s[t].x);
    suffix.push_back(x);
    std::stable_sort(suffix.begin(), suffix.end());
    std::vector<Code> codes;
    for (std::size_t t = 0; t < P; ++t) codes.push_back(s[t].x);
    codes.insert(codes.end(), suffix.begin(), suffix.end());
    const std::size_t N = codes.size();
    const std::size_t at = P + static_cast<std::size_t>(std::find(suffix.begin(), suffix.end(), x) - suffix.begin());

    std::optional<std::size_t> best;
    Label want = 0;
    for (std::uint64_t val = 0; val < (std::uint64_t{1} << N); ++val) {
      bool ok = false;
      for (const auto& f : g.components) ok = ok || accepts(f, codes, val);
      if (!ok) continue;
      std::size_t cost = 0;
      for (std::size_t t = 0; t < P; ++t) cost += (val >> (N - 1 - t) & 1U) != s[t].y;
      if (!best || cost < *best) {
        best = cost;
        want = static_cast<Label>(val >> (N - 1 - at) & 1U);
      }
    }
    if (!best) ++empty;
    Label got = term_predict(g, s, x);
    if (got != want) return {false, fmt("instance %d: term_predict %d, brute force %d", inst, got, want)};
  }
  return {true, fmt("500 instances, %zu with empty projection", empty)};
}

Verdict transcriptions() {
  std::mt19937_64 rng(59);
  std::size_t exp_h1 = 0, root_h1 = 0, b_over_one = 0;
  for (int inst = 0; inst < 100; ++inst) {
    ConceptClass c = ConceptClass::threshold_nat();
    switch (inst % 4) {
      case 0: c = ConceptClass::threshold_nat(); break;
      case 1: c = ConceptClass::singletons_nat(); break;
      case 2: c = ConceptClass::threshold_grid(6); break;
      default:
        do c = random_table(rng, 2 + rng() % 3, 6);
        while (reference::brute_vc(c, c.full_domain()) > 2);
    }
    std::vector<Code> support = c.kind() == ClassKind::finite_table ? c.full_domain() : c.domain_prefix(7);
    DiscreteDistribution d;
    std::vector<double> w;
    for (std::size_t j = 0; j < support.size(); ++j) w.push_back(1.0 + static_cast<double>(rng() % 4));
    double sum = 0;
    for (double v : w) sum += v;
    for (std::size_t j = 0; j < support.size(); ++j)
      d.atoms.push_back({support[j], w[j] / sum, static_cast<double>(rng() % 11) / 10});
    d.tail_mass = 0;
    double mass = 0;
    for (const auto& a : d.atoms) mass += a.p;
    d.atoms.back().p += 1.0 - mass;
    const std::size_t n = 12 + rng() % 37;
    Rng draw(static_cast<std::uint64_t>(inst), n, 0);
    auto s = sample(d, n, draw);

    std::vector<Code> queries = c.domain_prefix(16);
    for (const auto& e : s) queries.push_back(e.x);
    if (c.kind() == ClassKind::threshold_nat || c.kind() == ClassKind::singletons_nat) queries.push_back(40);
    queries = sorted_unique(queries);

    LearnerConfig cfg;
    cfg.exp_b_cap = 6;
    cfg.vcl_b_cap = 6;
    ExpRateTrace et;
    auto h = exp_rate_learner(share(c), s, cfg, &et);
    auto ref = reference::exp_rate(c, s, 6);
    if (et.b_hat != ref.b_hat || et.chose_h1 != ref.chose_h1)
      return {false, fmt("instance %d: near-exponential learner selection differs", inst)};
    for (Code x : queries)
      if (h(x) != ref.predict(x)) return {false, fmt("instance %d: near-exponential learner differs at %llu", inst,
                                                     static_cast<unsigned long long>(x))};
    exp_h1 += et.chose_h1;
    b_over_one += et.b_hat.value_or(0) > 1;

    VclRootTrace vt;
    auto g = super_root_learner(share(c), s, cfg, &vt);
    auto gref = reference::super_root(c, reference::brute_vc(c, c.domain_prefix(8)), s, 6);
    if (vt.b_hat != gref.b_hat || vt.chose_h1 != gref.chose_h1)
      return {false, fmt("instance %d: super-root learner selection differs", inst)};
    for (Code x : queries)
      if (g(x) != gref.predict(x)) return {false, fmt("instance %d: super-root learner differs at %llu", inst,
                                                      static_cast<unsigned long long>(x))};
    root_h1 += vt.chose_h1;
  }
  return {true, fmt("100 instances; committee chosen %zu/%zu times, b-hat > 1 in %zu runs", exp_h1, root_h1,
                    b_over_one)};
}

Verdict finite_rate() {
  auto cls = share(ConceptClass::finite_table({4}, {{0}, {1}}));
  auto pair = finite_lb_pair(*cls);
  std::vector<std::uint64_t> ns;
  for (std::uint64_t n = 10; n <= 200; n += 10) ns.push_back(n);
  auto curve = learning_curve("erm", cls, pair.p0, ns, 2000, 6, {}, default_threads());
  const double eps = 1.0 / 3, H = 2;
  for (const auto& p : curve.points) {
    double bound = 2 * H * std::exp(-(eps * eps / 2) * static_cast<double>(p.n)) / 3;
    if (!(p.mean_excess <= bound + 3 * p.stderr_))
      return {false, fmt("n=%llu: mean excess %.4g > bound %.4g + 3 stderr %.4g",
                         static_cast<unsigned long long>(p.n), p.mean_excess, bound, 3 * p.stderr_)};
  }
  auto fit = fit_rate(curve);
  const auto& e = fit.exponential;
  if (!(e.c > 0 && e.r_squared >= 0.8))
    return {false, fmt("log-linear slope %.4g, r^2 %.4g over %zu points", -e.c, e.r_squared, e.points)};
  return {true, fmt("bound holds at %zu sizes; slope %.4g, r^2 %.4g over %zu positive points", ns.size(), -e.c,
                    e.r_squared, e.points)};
}

Verdict exp_consistency() {
  auto cls = share(ConceptClass::threshold_nat());
  DiscreteDistribution d;
  for (Code x = 1; x <= 8; ++x) {
    double p = x < 8 ? std::ldexp(1.0, -static_cast<int>(x)) : std::ldexp(1.0, -7);
    d.atoms.push_back({x, p, x >= 4 ? 0.8 : 0.2});
  }
  LearnerConfig cfg;
  cfg.soa.domain_budget = 16;
  auto curve = learning_curve("exp", cls, d, {24, 192}, 500, 8, cfg, default_threads());
  const auto& a = curve.points[0];
  const auto& b = curve.points[1];
  double gap = b.mean_excess - a.mean_excess / 2;
  double tol = 2 * std::sqrt(b.stderr_ * b.stderr_ + a.stderr_ * a.stderr_ / 4);
  double ra = std::sqrt(24.0) * a.mean_excess, rb = std::sqrt(192.0) * b.mean_excess;
  double rtol = 2 * std::sqrt(192.0 * b.stderr_ * b.stderr_ + 24.0 * a.stderr_ * a.stderr_);
  std::string detail = fmt("excess %.4g (se %.2g) at 24, %.4g (se %.2g) at 192; sqrt(n) excess %.4g -> %.4g",
                           a.mean_excess, a.stderr_, b.mean_excess, b.stderr_, ra, rb);
  return {gap < tol && rb - ra < rtol, detail};
}

Verdict audit() {
  auto cls = share(ConceptClass::threshold_nat());
  DiscreteDistribution d;
  d.atoms = {{2, 0.4, 0.3}, {5, 0.6, 0.75}};
  std::string detail;
  bool ok = true;
  for (std::uint64_t n : {60, 120}) {
    auto r = audit_concentration(cls, d, n, PsiFn{}, 500, 12, {}, default_threads());
    ok = ok && r.within_slack;
    detail += fmt("n=%llu: %llu/500 failures, ceiling %.3g + slack %.3g; ", static_cast<unsigned long long>(n),
                  static_cast<unsigned long long>(r.failures), r.ceiling, r.slack);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Verdict super_root_invariants() {
  auto c = ConceptClass::threshold_nat();
  auto tree = shatters_littlestone_tree(c, 6, 64);
  if (!tree.shattered) return {false, "no depth-6 Littlestone tree found"};
  auto check = [](const std::vector<SuperRootLevel>& levels) {
    for (const auto& l : levels)
      if (!(l.rate_ok && l.next_mass_ok && l.eta_ok && l.tail_ok && l.decay_ok)) return false;
    return true;
  };
  try {
    auto r = super_root_branch(c, tree.tree, std::vector<Label>(6, 1), PhiFn::parse("invsqrtlog"), 6);
    return {check(r.levels), fmt("%zu levels generated and certified", r.levels.size())};
  } catch (const SuperRootError& e) {
    std::string done;
    for (const auto& l : e.levels) done += fmt(" n_%zu=2^%.1f", l.k, l.log2_n);
    return {false, fmt("construction stopped after %zu levels (%s):%s", e.levels.size(), e.what(), done.c_str())};
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism() {
  fs::path dir = fs::temp_directory_path() / "urates_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) { std::ofstream(dir / name) << text; };
  auto at = [&](const std::string& name) { return (dir / name).string(); };
  put("thr.json", R"({"kind":"threshold_nat"})");
  put("pair.json", R"({"kind":"finite_table","domain":[3,8],"hyps":[[0,1],[0,0]]})");
  put("dist.json", R"({"atoms":[{"x":1,"p":0.25,"eta":0.2},{"x":3,"p":0.5,"eta":0.7},{"x":6,"p":0.25,"eta":0.9}],"tail_mass":0})");

  struct Job {
    std::string name;
    std::string args;  // {out} is replaced by the output path
  };
  std::vector<Job> jobs{
      {"dims", "dims --class " + at("thr.json") + " --tree vcl --depth 2 --out {out}"},
      {"pair", "adversary --kind finite-pair --class " + at("pair.json") + " --out {out}"},
      {"nearexp", "adversary --kind near-exp --class " + at("thr.json") + " --beta 0.2 --i 2 --depth 5 --out {out}"},
      {"superroot", "adversary --kind super-root --class " + at("thr.json") +
                        " --phi power:0.75 --depth 5 --branch 10110 --out " + at("sr_dist.json") + " --report {out}"},
      {"curve", "curve --learner exp --class " + at("thr.json") + " --dist " + at("dist.json") +
                    " --ns 9,18,36 --reps 40 --seed 3 --out {out}"},
      {"curve_vcl", "curve --learner vclroot --class " + at("thr.json") + " --dist " + at("dist.json") +
                        " --ns 8,16 --reps 20 --seed 4 --out {out}"},
      {"audit", "audit --class " + at("thr.json") + " --dist " + at("dist.json") +
                    " --n 30 --trials 40 --seed 5 --out {out}"},
      {"coin", "oracle coin --gamma 0.1 --n 41 --out {out}"},
  };
  std::size_t files = 0;
  for (const auto& job : jobs) {
    std::vector<std::string> outs;
    for (const char* threads : {"1", "4", "4"}) {
      std::string out = at(job.name + "_" + std::to_string(outs.size()) + ".out");
      std::string args = job.args;
      args.replace(args.find("{out}"), 5, out);
      std::string cmd = std::string(URATES_CLI) + " --threads " + threads + " " + args + " 2>" + at("err.txt");
      if (std::system(cmd.c_str()) != 0) return {false, job.name + " failed: " + slurp(dir / "err.txt")};
      outs.push_back(slurp(out));
    }
    if (outs[0].empty() || outs[0] != outs[1] || outs[1] != outs[2])
      return {false, job.name + " output differs between runs"};
    ++files;
  }
  std::string fit_a, fit_b;
  for (auto* target : {&fit_a, &fit_b}) {
    std::string cmd = std::string(URATES_CLI) + " fit --curve " + at("curve_0.out") + " --out " + at("fit.json");
    if (std::system(cmd.c_str()) != 0) return {false, "fit failed"};
    *target = slurp(dir / "fit.json");
  }
  if (fit_a != fit_b) return {false, "fit output differs between runs"};
  fs::remove_all(dir);
  return {true, fmt("%zu commands byte-identical across 1 and 4 threads, plus fit", files)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run one criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, Verdict (*)()>> checks{
      {"coin-test Bayes error above e^-n", coin_lower_bound},
      {"SOA mistakes within Littlestone dimension", soa_mistakes},
      {"Sauer bounds and partial VC <= 5b", sauer},
      {"transductive ERM equals brute force", term_equivalence},
      {"learners match reference transcriptions", transcriptions},
      {"finite-class ERM rate", finite_rate},
      {"near-exponential learner consistency", exp_consistency},
      {"concentration audit", audit},
      {"super-root construction invariants", super_root_invariants},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = checks[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s (%s; %.1fs)\n", i + 1, v.pass ? "PASS" : "FAIL", checks[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
