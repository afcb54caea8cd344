#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "urates.hpp"

using namespace urates;
using nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << text;
}

std::string pretty(const ordered_json& j) { return j.dump(2) + "\n"; }

ClassPtr load_class(const std::string& path) { return share(ConceptClass::parse(slurp(path))); }

DiscreteDistribution load_dist(const std::string& path) { return DiscreteDistribution::parse(slurp(path)); }

std::vector<std::uint64_t> parse_ns(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoull(tok));
  }
  if (out.empty()) throw DomainError("--ns is empty");
  return out;
}

ordered_json vcl_json(const VclNode& n) {
  ordered_json j;
  j["points"] = n.points;
  auto kids = ordered_json::array();
  for (const auto& c : n.children) kids.push_back(vcl_json(c));
  j["children"] = kids;
  return j;
}

ordered_json dim_json(const DimResult& d) {
  ordered_json j;
  j["value"] = d.value;
  j["saturated"] = d.saturated;
  return j;
}

ordered_json level_json(const SuperRootLevel& l) {
  ordered_json j;
  j["k"] = l.k;
  j["n"] = l.n;
  j["log2_n"] = l.log2_n;
  j["p_exponent"] = l.p_exponent;
  j["p"] = l.p;
  j["eta"] = l.eta;
  j["rate_ok"] = l.rate_ok;
  j["next_mass_ok"] = l.next_mass_ok;
  j["eta_ok"] = l.eta_ok;
  j["tail_ok"] = l.tail_ok;
  j["decay_ok"] = l.decay_ok;
  return j;
}

// Adds `--key value` for config entries that apply to the selected command and
// were not given on the command line.
std::vector<std::string> config_args(CLI::App& app, const std::vector<std::string>& args, const std::string& path) {
  std::vector<CLI::App*> chain{&app};
  for (const auto& a : args) {
    if (a.empty() || a[0] == '-') continue;
    if (auto* sub = chain.back()->get_subcommand_no_throw(a)) chain.push_back(sub);
  }
  auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  auto trim = [](const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> extra;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!trim(line).empty()) throw DomainError("config line without '=': " + line);
      continue;
    }
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "config") continue;
    for (auto* a : chain) {
      if (!a->get_option_no_throw("--" + key)) continue;
      if (!given("--" + key)) {
        extra.push_back("--" + key);
        extra.push_back(value);
      }
      break;
    }
  }
  return extra;
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urates: universal learning-rate laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = default_threads();
  std::string config;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", config, "key=value defaults");

  std::string class_path, dist_path, out_path;

  auto* dims = app.add_subcommand("dims", "VC and Littlestone dimensions");
  std::size_t vc_budget = 16, ldim_depth = 8, tree_depth = 4, tree_domain = 16;
  std::string tree_kind;
  dims->add_option("--class", class_path)->required();
  dims->add_option("--vc-budget", vc_budget);
  dims->add_option("--ldim-depth", ldim_depth);
  dims->add_option("--tree", tree_kind)->check(CLI::IsMember({"littlestone", "vcl"}));
  dims->add_option("--depth", tree_depth);
  dims->add_option("--domain-budget", tree_domain);
  dims->add_option("--out", out_path);

  auto* adv = app.add_subcommand("adversary", "hard distributions");
  std::string adv_kind, phi = "invsqrtlog", branch;
  double beta = 0.25;
  std::size_t adv_i = 0, adv_depth = 6, adv_domain = 64, member = 0;
  std::string report_path;
  adv->add_option("--kind", adv_kind)->required()->check(CLI::IsMember({"finite-pair", "near-exp", "super-root"}));
  adv->add_option("--class", class_path)->required();
  adv->add_option("--beta", beta);
  adv->add_option("--i", adv_i);
  adv->add_option("--depth", adv_depth);
  adv->add_option("--phi", phi);
  adv->add_option("--branch", branch, "branch labels, e.g. 101101");
  adv->add_option("--member", member, "finite-pair member 0 or 1")->check(CLI::Range(0, 1));
  adv->add_option("--domain-budget", adv_domain);
  adv->add_option("--report", report_path, "construction report (JSON)");
  adv->add_option("--out", out_path)->required();

  auto* curve = app.add_subcommand("curve", "learning curve");
  std::string learner, ns_text, psi = "sqrt";
  std::uint64_t reps = 100, seed = 0;
  std::size_t b_cap = 0, soa_domain_budget = 16, soa_depth_budget = 16;
  curve->add_option("--learner", learner)->required()->check(
      CLI::IsMember({"erm", "exp", "vclroot", "baseline", "bayes"}));
  curve->add_option("--class", class_path)->required();
  curve->add_option("--dist", dist_path)->required();
  curve->add_option("--ns", ns_text)->required();
  curve->add_option("--reps", reps)->required();
  curve->add_option("--seed", seed)->required();
  curve->add_option("--psi", psi);
  curve->add_option("--b-cap", b_cap);
  curve->add_option("--soa-domain", soa_domain_budget);
  curve->add_option("--soa-depth", soa_depth_budget);
  curve->add_option("--out", out_path)->required();

  auto* fit = app.add_subcommand("fit", "rate fits for a curve");
  std::string curve_path;
  fit->add_option("--curve", curve_path)->required();
  fit->add_option("--out", out_path);

  auto* audit = app.add_subcommand("audit", "concentration audit");
  std::uint64_t audit_n = 60, trials = 100;
  audit->add_option("--class", class_path)->required();
  audit->add_option("--dist", dist_path)->required();
  audit->add_option("--n", audit_n)->required();
  audit->add_option("--trials", trials)->required();
  audit->add_option("--seed", seed)->required();
  audit->add_option("--psi", psi);
  audit->add_option("--b-cap", b_cap);
  audit->add_option("--out", out_path);

  auto* oracle = app.add_subcommand("oracle", "exact oracles");
  oracle->require_subcommand(1);
  auto* coin = oracle->add_subcommand("coin", "Bayes error of the two-coin test");
  double gamma = 0;
  std::uint64_t coin_n = 0;
  coin->add_option("--gamma", gamma)->required();
  coin->add_option("--n", coin_n)->required();
  coin->add_option("--out", out_path);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (auto cfg = config_path(args); !cfg.empty()) {
      auto extra = config_args(app, args, cfg);
      args.insert(args.end(), extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (dims->parsed()) {
      auto cls = load_class(class_path);
      ordered_json j;
      j["class"] = kind_name(cls->kind());
      j["vc"] = dim_json(vc_dimension(*cls, vc_budget));
      j["vc"]["budget"] = vc_budget;
      j["littlestone"] = dim_json(littlestone_dimension(*cls, ldim_depth, tree_domain));
      j["littlestone"]["depth_budget"] = ldim_depth;
      j["littlestone"]["domain_budget"] = tree_domain;
      if (tree_kind == "littlestone") {
        auto s = shatters_littlestone_tree(*cls, tree_depth, tree_domain);
        ordered_json t;
        t["kind"] = tree_kind;
        t["depth"] = tree_depth;
        t["shattered"] = s.shattered;
        if (s.shattered) t["nodes"] = s.tree.nodes;
        j["tree"] = t;
      } else if (tree_kind == "vcl") {
        auto s = shatters_vcl_tree(*cls, tree_depth, tree_domain);
        ordered_json t;
        t["kind"] = tree_kind;
        t["depth"] = tree_depth;
        t["shattered"] = s.shattered;
        if (s.shattered) t["root"] = vcl_json(s.root);
        j["tree"] = t;
      }
      emit(pretty(j), out_path);
    } else if (adv->parsed()) {
      auto cls = load_class(class_path);
      ordered_json report;
      report["kind"] = adv_kind;
      DiscreteDistribution d;
      if (adv_kind == "finite-pair") {
        auto p = finite_lb_pair(*cls, adv_domain);
        d = member ? p.p1 : p.p0;
        report["x"] = p.x;
        report["h0"] = p.h0;
        report["h1"] = p.h1;
        report["member"] = member;
      } else if (adv_kind == "near-exp") {
        d = near_exp_family(*cls, beta, adv_i, adv_depth, adv_domain);
        report["beta"] = beta;
        report["i"] = adv_i;
        report["depth"] = adv_depth;
      } else {
        auto f = PhiFn::parse(phi);
        auto s = shatters_littlestone_tree(*cls, adv_depth, adv_domain);
        if (!s.shattered)
          throw DomainError("no Littlestone tree of depth " + std::to_string(adv_depth) + " within the domain budget");
        std::vector<Label> br;
        if (branch.empty()) br.assign(adv_depth, 1);
        for (char ch : branch) {
          if (ch != '0' && ch != '1') throw DomainError("--branch takes 0/1 characters");
          br.push_back(static_cast<Label>(ch - '0'));
        }
        report["phi"] = f.str();
        report["depth"] = adv_depth;
        try {
          auto r = super_root_branch(*cls, s.tree, br, f, adv_depth);
          d = r.dist;
          auto lv = ordered_json::array();
          for (const auto& l : r.levels) lv.push_back(level_json(l));
          report["levels"] = lv;
        } catch (const SuperRootError& e) {
          auto lv = ordered_json::array();
          for (const auto& l : e.levels) lv.push_back(level_json(l));
          report["levels"] = lv;
          report["error"] = e.what();
          if (!report_path.empty()) emit(pretty(report), report_path);
          throw;
        }
      }
      emit(d.dump() + "\n", out_path);
      if (!report_path.empty()) emit(pretty(report), report_path);
    } else if (curve->parsed()) {
      auto cls = load_class(class_path);
      auto dist = load_dist(dist_path);
      LearnerConfig cfg;
      cfg.psi = PsiFn::parse(psi);
      cfg.soa.domain_budget = soa_domain_budget;
      cfg.soa.depth_budget = soa_depth_budget;
      if (b_cap) cfg.exp_b_cap = cfg.vcl_b_cap = b_cap;
      auto c = learning_curve(learner, cls, dist, parse_ns(ns_text), reps, seed, cfg, threads);
      emit(curve_to_csv(c), out_path);
    } else if (fit->parsed()) {
      auto r = fit_rate(curve_from_csv(slurp(curve_path)));
      emit(pretty(r.to_json()), out_path);
    } else if (audit->parsed()) {
      auto cls = load_class(class_path);
      auto dist = load_dist(dist_path);
      LearnerConfig cfg;
      cfg.psi = PsiFn::parse(psi);
      if (b_cap) cfg.exp_b_cap = b_cap;
      auto r = audit_concentration(cls, dist, audit_n, cfg.psi, trials, seed, cfg, threads);
      emit(pretty(r.to_json()), out_path);
    } else if (coin->parsed()) {
      emit(format_double(coin_test_bayes_error(gamma, coin_n)) + "\n", out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
