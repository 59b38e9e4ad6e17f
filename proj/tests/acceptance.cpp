// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   acceptance [output-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "harris.hpp"

using namespace harris;
namespace fs = std::filesystem;

namespace {

fs::path g_out;

struct Check {
  std::vector<std::string> failures;
  std::ostringstream info;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

ExperimentConfig config(const Json& j) {
  std::vector<std::string> errors;
  auto c = config_from_json(j, errors);
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

ExperimentResult run_into(const Json& j, const fs::path& dir) {
  auto r = run(config(j));
  write_artifacts(r, dir);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

// Configs whose artifacts are compared byte for byte by the determinism check.
const Json kEx3Escape = {{"experiment", "escape"}, {"example", "ex3"}, {"start", "2"},
                         {"horizon", 10000},       {"replicas", 100000}, {"seed", 42}};
const Json kEx3Tv = {{"experiment", "tv"}, {"example", "ex3"}, {"start", "5"}, {"horizon", 10000}, {"truncation", 100000}};
Json ex9_escape(const std::string& start) {
  return {{"experiment", "escape"}, {"example", "ex9"}, {"start", start},
          {"horizon", 10000},       {"replicas", 1000},  {"seed", 42}};
}
const Json kToy = {{"experiment", "transdim-marginal"}, {"seed", 42}, {"horizon", 1000000},
                   {"monitor_replicas", 100}, {"monitor_steps", 10000}};

void criterion1(Check& c) {
  const auto esc = run_into(kEx3Escape, g_out / "c1_escape");
  const double est = esc.summary["estimates"]["stay_fraction"];
  c.expect(within(est, 0.495, 0.505), "escape estimate " + std::to_string(est) + " outside [0.495, 0.505]");
  const double hit = hitting_probability(example3_truncated(100000), {0}, 1);
  c.expect(within(hit, 0.499, 0.501), "hitting probability " + std::to_string(hit));
  const auto tv = run_into(kEx3Tv, g_out / "c1_tv");
  const double tvn = tv.summary["estimates"]["tv"];
  c.expect(within(tvn, 0.799, 0.801), "tv at n=1e4 " + std::to_string(tvn));
  c.info << "escape=" << est << " hit=" << hit << " tv=" << tvn;
}

void criterion2(Check& c) {
  const auto r = run(config({{"experiment", "escape"}, {"example", "ex4"}, {"start", "1/2"},
                             {"horizon", 10000}, {"replicas", 100000}, {"seed", 42}}));
  const double est = r.summary["estimates"]["stay_fraction"];
  c.expect(within(est, 0.495, 0.505), "escape estimate " + std::to_string(est));
  c.info << "escape=" << est;
}

void criterion3(Check& c) {
  struct Row {
    double x1, est, lo, hi;
  };
  std::vector<Row> rows;
  for (const char* s : {"2,0", "5,0", "10,0"}) {
    const auto r = run_into(ex9_escape(s), g_out / (std::string("c3_") + s));
    rows.push_back({std::stod(s), r.summary["estimates"]["stay_fraction"], r.summary["ci"]["low"],
                    r.summary["ci"]["high"]});
    if (std::string(s) == "10,0") {
      const double bound = r.summary["estimates"]["acceptance_union_bound"];
      const double oracle = 1.0 - 1e4 * std::exp(-20.0);
      c.expect(std::abs((1.0 - bound) - oracle) <= 1e-15, "union bound " + std::to_string(bound));
      c.expect(r.summary["ci"]["high"].get<double>() >= oracle, "stay fraction below the union-bound oracle");
    }
  }
  c.expect(rows.back().est >= 0.999, "stay fraction at (10,0) " + std::to_string(rows.back().est));
  for (std::size_t i = 1; i < rows.size(); ++i)
    c.expect(rows[i].est >= rows[i - 1].est || rows[i].hi >= rows[i - 1].lo,
             "estimates decrease between x1=" + std::to_string(rows[i - 1].x1) + " and " + std::to_string(rows[i].x1));

  const auto m = example9();
  RngStream rng(42, 0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double x1 = rng.uniform(1.5, 30.0), delta = rng.uniform(0.0, x1 - 1.0);
    const double la = coord_acceptance_log(m.target, m.proposals[0], Point{x1, 0.0}, x1 - delta);
    worst = std::max(worst, std::abs(std::exp(la) - std::exp(-delta)));
  }
  c.expect(worst <= 1e-10, "coordinate-1 acceptance deviates by " + std::to_string(worst));
  c.info << "stay(2,5,10)=" << rows[0].est << "," << rows[1].est << "," << rows[2].est << " max|alpha-e^-d|=" << worst;
}

void criterion4(Check& c) {
  for (const char* fixture : {"normal2", "ex9", "ex14"}) {
    RngStream rng = derive_stream(42, 0);
    double gap = 0.0, max_la = kNegInf;
    bool alpha_ok = true;
    const auto pairs = balance_pairs(fixture, 10000, rng);
    for (const auto& p : pairs) {
      gap = std::max(gap, p.sides.gap());
      max_la = std::max({max_la, p.log_alpha_xy, p.log_alpha_yx});
      for (double la : {p.log_alpha_xy, p.log_alpha_yx}) alpha_ok = alpha_ok && la <= 0.0 && !std::isnan(la);
    }
    c.expect(pairs.size() == 10000, std::string(fixture) + ": pair count");
    c.expect(gap <= 1e-12, std::string(fixture) + ": balance gap " + std::to_string(gap));
    c.expect(alpha_ok, std::string(fixture) + ": alpha outside [0,1]");
    c.info << fixture << " gap=" << gap << " ";
  }
}

void criterion5(Check& c) {
  const auto m = example14();
  const auto& b = m.target.bounds();
  const auto sub = discretize_coordinate_chain(m.target, restrict_subchain(m.sampler(), {0}), Point{4.5, 0.0},
                                               GridSpec{b.lower, b.upper, 0.1});
  const auto full = discretize_coordinate_chain(m.target, m.sampler(), Point{4.5, 0.0}, GridSpec{b.lower, b.upper, 0.25});
  const auto n_sub = communicating_classes(sub.kernel).size();
  const auto n_full = communicating_classes(full.kernel).size();
  c.expect(n_sub == 2, "subchain classes " + std::to_string(n_sub));
  c.expect(n_full == 1, "full-chain classes " + std::to_string(n_full));
  const auto sampler = m.sampler();
  int visited = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    RngStream rng = derive_stream(42, r);
    Point x{4.5, 0.0};
    for (std::uint64_t n = 1; n <= 100000; ++n) {
      x = mwg_step(m.target, sampler, n, x, rng).state;
      if (x[0] < -4.0) {
        ++visited;
        break;
      }
    }
  }
  c.expect(visited >= 99, "replicas reaching x1 < -4: " + std::to_string(visited));
  c.info << "classes(sub)=" << n_sub << " classes(full)=" << n_full << " visited=" << visited << "/100";
}

void criterion6(Check& c) {
  const auto m9 = example9();
  const auto n2 = normal2_target();
  for (const auto& s : {QuadratureSettings{}, QuadratureSettings{}.doubled()}) {
    const std::string tag = s.pieces_per_shell == 1 ? "base" : "doubled";
    const auto line = hyperplane_integral(m9.target, Hyperplane(2, {{1, 0.0}}), s);
    c.expect(line.verdict == Verdict::divergent, tag + ": ex9 line verdict " + to_string(line.verdict));
    const auto whole = hyperplane_integral(m9.target, Hyperplane::whole_space(2), s);
    c.expect(whole.verdict == Verdict::finite && std::abs(whole.value() - 1.0) <= 1e-3,
             tag + ": ex9 full integral " + to_string(whole.verdict) + " " + std::to_string(whole.value()));
    for (std::size_t i : {0u, 1u}) {
      const auto slice = hyperplane_integral(n2, Hyperplane(2, {{i, 0.0}}), s);
      c.expect(slice.verdict == Verdict::finite, tag + ": normal slice verdict " + to_string(slice.verdict));
    }
    if (tag == "base") c.info << "ex9 full=" << whole.value() << " line S_k=" << line.value();
  }
}

void criterion7(Check& c) {
  const auto flip = DiscreteKernel::from_dense({{0, 1}, {1, 0}});
  c.expect(period(flip) == 2, "flip period");
  double worst = 0.0;
  for (std::uint64_t n = 0; n <= 20; ++n)
    for (std::size_t s : {0u, 1u}) worst = std::max(worst, tv_period_averaged(flip, 2, s, n));
  c.expect(worst <= 1e-15, "period-averaged tv " + std::to_string(worst));
  const auto k = DiscreteKernel::from_dense({{0.5, 0.3, 0.2}, {0.2, 0.6, 0.2}, {0.3, 0.3, 0.4}});
  c.expect(communicating_classes(k).size() == 1 && period(k) == 1, "3-state chain not aperiodic irreducible");
  const auto pi = stationary_distribution(k);
  double tv = 0.0;
  for (std::size_t s = 0; s < 3; ++s) tv = std::max(tv, tv_exact(k, s, 50, pi));
  c.expect(tv < 1e-8, "tv at n=50 " + std::to_string(tv));
  c.info << "flip avg tv=" << worst << " 3-state tv50=" << tv;
}

void criterion8(Check& c) {
  const double rho = 0.5, sd = std::sqrt(1.0 - rho * rho);
  TargetDensity t(2, [](std::span<const double>) { return true; }, [rho](std::span<const double> x) {
    return -(x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / (2.0 * (1.0 - rho * rho));
  });
  std::vector<CoordinateProposal> props;
  for (std::size_t i : {0u, 1u}) {
    const std::size_t j = 1 - i;
    props.push_back(gibbs_conditional_proposal(
        i, [=](const Point& x, RngStream& rng) { return rho * x[j] + sd * rng.normal(); },
        [=](const Point& x, double z) { return standard_normal_log_pdf((z - rho * x[j]) / sd) - std::log(sd); }));
  }
  CoordinateSampler s(props, ScanSchedule::random());
  RngStream rng = derive_stream(42, 0);
  Point x{0.0, 0.0};
  std::uint64_t rejected = 0;
  double worst = 0.0;
  for (std::uint64_t n = 1; n <= 10000; ++n) {
    const auto r = mwg_step(t, s, n, x, rng);
    rejected += r.accepted ? 0 : 1;
    worst = std::max(worst, std::abs(r.log_alpha));
    x = r.state;
  }
  c.expect(rejected == 0, std::to_string(rejected) + " rejections");
  c.expect(worst < 1e-9, "max |log alpha| " + std::to_string(worst));
  c.info << "rejections=" << rejected << " max|log alpha|=" << worst;
}

void criterion9(Check& c) {
  const auto r = run_into(kToy, g_out / "c9_transdim");
  const auto& e = r.summary["estimates"];
  const double dev = e["max_abs_deviation"];
  c.expect(dev <= 0.02, "model frequency deviation " + std::to_string(dev));
  c.expect(e["replicas_with_within_accept"] == 100, "replicas without a within-model accept");
  c.expect(e["replicas_covering_start_coordinates"] == 100, "replicas not covering all coordinates");

  const auto fam = make_toy_family({});
  RngStream rng = derive_stream(42, 0);
  double rt = 0.0, jac = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const std::size_t lo = 1 + rng.uniform_index(2);
    const std::size_t hi = lo + 1 + (lo == 1 ? rng.uniform_index(2) : 0);
    std::vector<double> x;
    for (std::size_t l = 0; l < fam.target.dim(hi); ++l) x.push_back(l < lo ? rng.normal() : rng.uniform());
    const auto up = apply_map(fam.maps, lo, hi, x);
    const auto back = apply_map(fam.maps, hi, lo, up.x);
    for (std::size_t l = 0; l < x.size(); ++l) rt = std::max(rt, std::abs(back.x[l] - x[l]));
    jac = std::max(jac, std::abs(up.log_jacobian + back.log_jacobian));
  }
  c.expect(rt <= 1e-12, "map roundtrip error " + std::to_string(rt));
  c.expect(jac <= 1e-12, "Jacobian sum " + std::to_string(jac));
  c.info << "max dev=" << dev << " roundtrip=" << rt << " jacobian=" << jac;
}

void criterion10(Check& c) {
  const auto k = DiscreteKernel::from_dense({{0.4, 0.6}, {0.5, 0.5}});
  const auto m = check_minorization(k, {0, 1});
  c.expect(m.has_value(), "no minorization found");
  if (m) {
    c.expect(std::abs(m->epsilon - 0.9) <= 1e-15, "epsilon " + std::to_string(m->epsilon));
    c.expect(std::abs(m->nu[0] - 4.0 / 9.0) <= 1e-15 && std::abs(m->nu[1] - 5.0 / 9.0) <= 1e-15, "nu");
  }
  std::vector<std::uint64_t> probes;
  for (std::uint64_t x = 2; x <= 1000; ++x) probes.push_back(x);
  const auto drift = check_drift_exact<Example3Chain, std::uint64_t>(
      example3(), [](const std::uint64_t& x) { return static_cast<double>(x); },
      [](const std::uint64_t&) { return false; }, 0.0, probes);
  bool all_flagged = true;
  double worst = 0.0;
  for (const auto& d : drift) {
    const double x = static_cast<double>(d.state);
    all_flagged = all_flagged && !d.satisfied;
    worst = std::max(worst, std::abs(d.expectation - (x + 1.0 - 1.0 / x)));
  }
  c.expect(all_flagged, "drift condition not flagged at every probe");
  c.expect(worst <= 1e-12 * 1001, "drift expectation error " + std::to_string(worst));
  c.info << "eps=" << (m ? m->epsilon : 0.0) << " drift violations=" << drift.size();
}

void criterion11(Check& c) {
  const fs::path again = g_out / "rerun";
  std::vector<std::pair<fs::path, fs::path>> pairs;
  auto rerun = [&](const Json& j, const std::string& first) {
    const auto r = run_into(j, again / first);
    for (const auto& name : {std::string("summary.json"), r.csv_name})
      pairs.emplace_back(g_out / first / name, again / first / name);
  };
  rerun(kEx3Escape, "c1_escape");
  rerun(kEx3Tv, "c1_tv");
  for (const char* s : {"2,0", "5,0", "10,0"}) rerun(ex9_escape(s), std::string("c3_") + s);
  rerun(kToy, "c9_transdim");
  for (const auto& [a, b] : pairs) {
    const bool same = fs::exists(a) && slurp(a) == slurp(b);
    c.expect(same, "differs: " + a.string());
  }
  c.info << pairs.size() << " files compared";
}

}  // namespace

int main(int argc, char** argv) {
  g_out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "harris_acceptance";
  fs::remove_all(g_out);
  fs::create_directories(g_out);

  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria = {
      {"1  ex3 escape/hitting/tv", criterion1},  {"2  ex4 escape", criterion2},
      {"3  ex9 line escape", criterion3},        {"4  detailed balance", criterion4},
      {"5  ex14 class split", criterion5},       {"6  hyperplane integrability", criterion6},
      {"7  period and tv", criterion7},          {"8  Gibbs never rejects", criterion8},
      {"9  trans-dimensional toy", criterion9},  {"10 minorization and drift", criterion10},
      {"11 determinism", criterion11},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s criterion %-30s %7.1fs  %s\n", ok ? "PASS" : "FAIL", name, secs, c.info.str().c_str());
    for (const auto& f : c.failures) std::printf("     - %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
