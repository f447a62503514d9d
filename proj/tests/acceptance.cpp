// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "power_oracle.hpp"
#include "region_oracle.hpp"
#include "risnoma/experiment.hpp"
#include "risnoma/rng.hpp"
#include "risnoma/scalar_rates.hpp"

using namespace risnoma;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and thresholds.
constexpr double kContainTol = 1e-6;         // bits/s/Hz
constexpr std::size_t kAsymmetryNeeded = 18;  // of 20
constexpr double kGridStep = 0.25;            // m
constexpr double kMirrorX = 37.5;             // m
constexpr double kFrontierTol = 1e-9;
constexpr double kTraceTol = 1e-9;
constexpr double kOracleGap = 0.02;
constexpr double kOracleShare = 0.95;
constexpr int kOracleGrid = 48;
constexpr double kIdentityTol = 1e-10;
constexpr int kIdentityDraws = 1000;
constexpr double kRegionBudget = 120.0, kDeployBudget = 600.0, kBeamBudget = 300.0;  // seconds

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Data rows of a metadata-headed CSV, keyed by column name.
std::vector<std::map<std::string, std::string>> read_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

struct Runs {
  fs::path config_dir, out_dir;
  std::map<std::string, RunResult> first;
  std::map<std::string, double> seconds;

  RunResult run(const std::string& name, const std::string& pass) {
    auto cfg = load_config((config_dir / (name + ".yaml")).string());
    cfg.output_dir = (out_dir / pass / name).string();
    fs::remove_all(cfg.output_dir);
    const auto t0 = Clock::now();
    auto res = run_experiment(cfg);
    if (pass == "a") {
      seconds[name] = seconds_since(t0);
      first[name] = res;
    }
    return res;
  }
};

// ---------------------------------------------------------------------------

Verdict region_containment(Runs& runs) {
  const fs::path dir = runs.first.at("region").output_dir;
  const auto cfg = load_config((runs.config_dir / "region.yaml").string());
  std::size_t checked = 0, failed = 0;
  for (std::size_t r = 0; r < cfg.region->realizations; ++r)
    for (const char* mode : {"static", "dynamic"}) {
      const auto stem = "regions/r" + std::to_string(r) + "_";
      const auto noma = read_region_csv((dir / (stem + "NOMA_" + mode + ".csv")).string()).region;
      for (const char* s : {"TDMA", "FDMA"}) {
        const auto other = read_region_csv((dir / (stem + s + "_" + mode + ".csv")).string()).region;
        for (const auto& p : other.boundary) {
          ++checked;
          if (!contains(noma, p, kContainTol)) ++failed;
        }
      }
    }
  const double t = runs.seconds.at("region");
  std::ostringstream os;
  os << checked << " TDMA/FDMA boundary points, " << failed << " outside NOMA; " << t << " s (budget " << kRegionBudget << " s)";
  return {failed == 0 && checked > 0 && t < kRegionBudget, os.str()};
}

Verdict dynamic_asymmetry(Runs& runs) {
  const fs::path dir = runs.first.at("region").output_dir;
  const auto rows = read_rows(dir / "region_summary.csv");
  std::map<std::string, std::map<std::string, double>> ratio;
  for (const auto& row : rows) ratio[row.at("realization")][row.at("scheme")] = std::stod(row.at("area_ratio"));
  std::size_t tdma_wins = 0, superset = 0, pairs = 0;
  for (const auto& [r, by_scheme] : ratio) {
    if (by_scheme.at("TDMA") > by_scheme.at("NOMA")) ++tdma_wins;
    for (const char* s : {"NOMA", "TDMA", "FDMA"}) {
      const auto stem = "regions/r" + r + "_" + s;
      const auto st = read_region_csv((dir / (stem + "_static.csv")).string()).region;
      const auto dy = read_region_csv((dir / (stem + "_dynamic.csv")).string()).region;
      ++pairs;
      if (region_contains(dy, st, kContainTol)) ++superset;
    }
  }
  std::ostringstream os;
  os << "TDMA ratio > NOMA ratio in " << tdma_wins << "/" << ratio.size() << " (need " << kAsymmetryNeeded
     << "); dynamic contains static in " << superset << "/" << pairs;
  return {ratio.size() == 20 && tdma_wins >= kAsymmetryNeeded && superset == pairs, os.str()};
}

Verdict deployment(Runs& runs) {
  auto optimum = [&](const std::string& name) {
    const auto j = nlohmann::json::parse(slurp(fs::path(runs.first.at(name).output_dir) / "deploy.json"));
    return j.at("optimum_x").get<double>();
  };
  const double fdma = optimum("deploy_sfdma"), tdma = optimum("deploy_dtdma"), noma = optimum("deploy_snoma");
  const double t = runs.seconds.at("deploy_sfdma") + runs.seconds.at("deploy_dtdma") + runs.seconds.at("deploy_snoma");
  const bool ok = std::abs(fdma - kMirrorX) <= kGridStep + 1e-12 && std::abs(tdma - kMirrorX) <= kGridStep + 1e-12 &&
                  std::abs(noma - kMirrorX) > kGridStep + 1e-12 && t < kDeployBudget;
  std::ostringstream os;
  os << "S-FDMA x*=" << fdma << ", D-TDMA x*=" << tdma << " (symmetric weights), S-NOMA x*=" << noma
     << " (asymmetric weights); " << t << " s (budget " << kDeployBudget << " s)";
  return {ok, os.str()};
}

ChannelSet scalar_channels(Rng& rng, std::size_t m) {
  ChannelSet ch;
  ch.blocked_direct = {false, false};
  CMatrix f(static_cast<Eigen::Index>(m), 1);
  for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, 0) = rng.complex_normal();
  ch.bs_ris.push_back(f);
  ch.ris_user.emplace_back();
  for (int k = 0; k < 2; ++k) {
    ch.direct.push_back(CVector::Constant(1, (0.5 + k) * rng.complex_normal()));
    CVector g(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.complex_normal();
    ch.ris_user[0].push_back(g);
  }
  return ch;
}

Verdict oracle_equivalence() {
  constexpr int kInstances = 20, kSplits = 1001;
  constexpr double kPower = 4.0;
  Rng rng(2718);
  int frontier_bad = 0, hull_bad = 0;
  for (int inst = 0; inst < kInstances; ++inst) {
    const ChannelSet ch = scalar_channels(rng, 2);
    const auto e = ProfileEnumeration::discrete(2, 1);
    RegionSampling sampling;
    sampling.boundary_samples = kSplits;
    const auto region = static_region(ch, e, Scheme::NOMA, kPower, sampling);

    // Enumeration oracle: rates straight from the SIC formulas per profile.
    std::vector<Point2> pts;
    for (std::uint64_t i = 0; i < e.size(); ++i) {
      const std::vector<RisProfile> ps{e.profile(i)};
      double g[2];
      for (int k = 0; k < 2; ++k) g[k] = std::norm(equivalent_channel(ch, k, ps)(0));
      const int weak = g[0] <= g[1] ? 0 : 1, strong = 1 - weak;
      const double x = kPower * g[strong];
      for (int s = 0; s < kSplits; ++s) {
        const double a = std::min(1.0, std::expm1(s / double(kSplits - 1) * std::log1p(x)) / x);
        double r[2];
        r[strong] = std::log2(1 + a * x);
        r[weak] = std::log2(1 + (1 - a) * kPower * g[weak] / (a * kPower * g[weak] + 1));
        pts.push_back({r[0], r[1]});
      }
    }
    const auto frontier = oracle::undominated(pts);
    auto near = [](const std::vector<Point2>& set, double x, double y) {
      for (const auto& q : set)
        if (std::abs(q[0] - x) <= kFrontierTol && std::abs(q[1] - y) <= kFrontierTol) return true;
      return false;
    };
    std::vector<Point2> boundary;
    for (const auto& b : region.boundary) boundary.push_back({b[0], b[1]});
    bool ok = true;
    for (const auto& b : boundary) ok = ok && near(frontier, b[0], b[1]);
    for (const auto& q : frontier) ok = ok && near(boundary, q[0], q[1]);
    if (!ok) ++frontier_bad;

    // Gift-wrapping hull of the same sampled points plus their axis
    // projections; its upper-right chain must equal the dynamic region's.
    const std::vector<RateRegion> in{region};
    const auto dyn = dynamic_region(in);
    std::vector<Point2> closure{{0.0, 0.0}};
    for (const auto& p : region.points) {
      closure.push_back({p[0], p[1]});
      closure.push_back({p[0], 0.0});
      closure.push_back({0.0, p[1]});
    }
    std::vector<Point2> chain;
    for (const auto& v : oracle::gift_wrap(closure))
      if (!(v[0] == 0.0 && v[1] == 0.0)) chain.push_back(v);
    std::sort(chain.begin(), chain.end());
    auto got = dyn.pieces.at(0);
    std::sort(got.begin(), got.end());
    if (chain != got) ++hull_bad;
  }
  std::ostringstream os;
  os << kInstances << " instances (M=2, B=1): frontier mismatches " << frontier_bad << ", hull vertex-set mismatches "
     << hull_bad;
  return {frontier_bad == 0 && hull_bad == 0, os.str()};
}

Verdict alternating_quality(Runs& runs) {
  const auto cfg = load_config((runs.config_dir / "beamform.yaml").string());
  const fs::path dir = runs.first.at("beamform").output_dir;
  const auto summary = read_rows(dir / "beamform.csv");
  const auto trace = read_rows(dir / "beamform_trace.csv");
  const auto& b = *cfg.beamform;

  std::map<std::string, std::vector<double>> traces;
  for (const auto& row : trace) traces[row.at("realization")].push_back(std::stod(row.at("objective")));
  std::size_t violations = 0;
  for (const auto& [r, t] : traces)
    for (std::size_t i = 1; i < t.size(); ++i)
      if (t[i] > t[i - 1] * (1 + kTraceTol)) ++violations;

  const auto t0 = Clock::now();
  std::size_t within = 0, sic_bad = 0;
  const auto e = ProfileEnumeration::discrete(b.elements, *b.design.bits);
  for (const auto& row : summary) {
    if (row.at("sic_ok") != "1") ++sic_bad;
    const auto r = std::stoull(row.at("realization"));
    const auto weak = std::stoul(row.at("weak")), strong = std::stoul(row.at("strong"));
    const ChannelSet ch = make_channels(cfg, b.antennas, {b.elements}, std::vector<bool>(2, b.block_direct), r);
    double best = INFINITY;
    for (std::uint64_t p = 0; p < e.size(); ++p) {
      const std::vector<RisProfile> ps{e.profile(p)};
      best = std::min(best, oracle::min_power(equivalent_channel(ch, weak, ps), equivalent_channel(ch, strong, ps),
                                              b.design.targets.m, b.design.targets.n, 1.0, kOracleGrid));
    }
    if ((std::stod(row.at("objective")) - best) / best <= kOracleGap) ++within;
  }
  const double t = runs.seconds.at("beamform");
  const double share = summary.empty() ? 0.0 : double(within) / double(summary.size());
  std::ostringstream os;
  os << summary.size() << " seeds: trace violations " << violations << ", SIC failures " << sic_bad << ", within "
     << kOracleGap * 100 << "% of oracle " << within << "/" << summary.size() << " (need " << kOracleShare * 100
     << "%); design " << t << " s (budget " << kBeamBudget << " s), oracle " << seconds_since(t0) << " s";
  return {summary.size() == 200 && violations == 0 && sic_bad == 0 && share >= kOracleShare && t < kBeamBudget, os.str()};
}

Verdict closed_forms() {
  Rng rng(31415);
  double worst_sum = 0.0, worst_align = 0.0, worst_k1 = 0.0;
  bool align_upper = true;
  for (int i = 0; i < kIdentityDraws; ++i) {
    // Equal gains: the NOMA sum rate does not depend on the power split.
    const double g = std::exp(4 * rng.uniform() - 2), p = std::exp(4 * rng.uniform() - 2), a = rng.uniform();
    const EffectiveGains eq{{g, g}};
    const auto r = noma_rates(eq, p, PowerSplit{{a, 1 - a}});
    worst_sum = std::max(worst_sum, std::abs(r[0] + r[1] - std::log2(1 + p * g)));

    // align_phases reaches the coherent bound and no profile exceeds it.
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 16);
    const cd d = rng.complex_normal();
    CVector gv(static_cast<Eigen::Index>(m)), fv(static_cast<Eigen::Index>(m));
    for (std::size_t e = 0; e < m; ++e) {
      gv(static_cast<Eigen::Index>(e)) = rng.complex_normal();
      fv(static_cast<Eigen::Index>(e)) = rng.complex_normal();
    }
    const double bound = coherent_bound(d, gv, fv);
    const CMatrix f = fv;
    const double aligned = std::abs(equivalent_channel(CVector::Constant(1, d), gv, f, align_phases(d, gv, fv))(0));
    worst_align = std::max(worst_align, std::abs(aligned - bound) / bound);
    std::vector<double> phases(m);
    for (auto& ph : phases) ph = 2 * std::numbers::pi * rng.uniform();
    const double random = std::abs(equivalent_channel(CVector::Constant(1, d), gv, f, RisProfile::from_phases(phases))(0));
    align_upper = align_upper && random <= bound * (1 + kIdentityTol);

    // One user: every scheme reduces to the single-user rate.
    const EffectiveGains one{{g}};
    const double ref = std::log2(1 + p * g);
    const std::vector<double> w{0.3 + rng.uniform()};
    const double vals[] = {noma_rates(one, p, PowerSplit{{1.0}})[0],
                           tdma_rates(one, p, ResourceShare{{1.0}})[0],
                           fdma_rates(one, p, ResourceShare{{1.0}}, PowerSplit{{1.0}})[0],
                           single_user_rate(g, p),
                           noma_max_weighted_sum_rate(one, p, w).value / w[0],
                           fdma_max_weighted_sum_rate(one, p, w).value / w[0]};
    for (double v : vals) worst_k1 = std::max(worst_k1, std::abs(v - ref));
  }
  std::ostringstream os;
  os << kIdentityDraws << " draws each: equal-gain sum-rate error " << worst_sum << ", align_phases relative error "
     << worst_align << (align_upper ? "" : " (random profile above bound)") << ", K=1 error " << worst_k1;
  return {worst_sum <= kIdentityTol && worst_align <= kIdentityTol && align_upper && worst_k1 <= kIdentityTol, os.str()};
}

Verdict determinism(Runs& runs, const std::vector<std::string>& names) {
  std::size_t files = 0, differing = 0;
  std::string first_diff;
  for (const auto& name : names) {
    const auto b = runs.run(name, "b");
    const auto& a = runs.first.at(name);
    if (a.artifacts.size() != b.artifacts.size()) {
      ++differing;
      first_diff = name + " (artifact count)";
      continue;
    }
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
      ++files;
      const auto x = slurp(fs::path(a.output_dir) / a.artifacts[i].path);
      const auto y = slurp(fs::path(b.output_dir) / b.artifacts[i].path);
      if (x != y || x.empty()) {
        ++differing;
        if (first_diff.empty()) first_diff = name + "/" + a.artifacts[i].path;
      }
    }
  }
  std::ostringstream os;
  os << files << " artifacts from " << names.size() << " configs compared byte for byte, " << differing << " differ";
  if (!first_diff.empty()) os << " (first: " << first_diff << ")";
  return {differing == 0 && files > 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path config_dir = argc > 1 ? argv[1] : RISNOMA_ACCEPTANCE_CONFIGS;
  const fs::path out_dir = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "risnoma_acceptance";
  Runs runs{config_dir, out_dir, {}, {}};
  const std::vector<std::string> names{"region", "deploy_sfdma", "deploy_dtdma", "deploy_snoma", "beamform", "cluster"};

  int failures = 0;
  auto report = [&](int id, const std::string& title, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str());
    std::fflush(stdout);
  };

  for (const auto& n : names) {
    try {
      runs.run(n, "a");
    } catch (const std::exception& e) {
      std::printf("run of %s failed: %s\n", n.c_str(), e.what());
    }
  }
  auto ran = [&](std::vector<std::string> need, std::function<Verdict()> f) {
    return [&runs, need, f]() -> Verdict {
      for (const auto& n : need)
        if (!runs.first.count(n)) return {false, "experiment " + n + " did not run"};
      return f();
    };
  };

  report(1, "region containment", ran({"region"}, [&] { return region_containment(runs); }));
  report(2, "dynamic-gain asymmetry", ran({"region"}, [&] { return dynamic_asymmetry(runs); }));
  report(3, "deployment symmetry", ran({"deploy_sfdma", "deploy_dtdma", "deploy_snoma"}, [&] { return deployment(runs); }));
  report(4, "brute-force oracle equivalence", oracle_equivalence);
  report(5, "alternating-design quality", ran({"beamform"}, [&] { return alternating_quality(runs); }));
  report(6, "closed-form identities", closed_forms);
  report(7, "determinism", [&] { return determinism(runs, names); });
  std::printf("%d of 7 criteria failed\n", failures);
  return failures;
}
