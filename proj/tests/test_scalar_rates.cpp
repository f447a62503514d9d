#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "risnoma/rng.hpp"
#include "risnoma/scalar_rates.hpp"

using namespace risnoma;

namespace {

// Brute-force weighted sum rate of two-user FDMA on a share x split grid.
double fdma_grid_oracle(double g0, double g1, double p, double w0, double w1, int n) {
  double best = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double b = static_cast<double>(i) / n;
    for (int j = 0; j <= n; ++j) {
      const double s = static_cast<double>(j) / n;
      const double r0 = b > 0 ? b * std::log2(1 + s * p * g0 / b) : (s > 0 ? -1e9 : 0.0);
      const double r1 = b < 1 ? (1 - b) * std::log2(1 + (1 - s) * p * g1 / (1 - b)) : (s < 1 ? -1e9 : 0.0);
      best = std::max(best, w0 * r0 + w1 * r1);
    }
  }
  return best;
}

// NOMA weighted sum rate over a power-split grid, evaluating the SIC rate
// expressions directly (weak user = smaller gain, lower index on ties).
double noma_grid_oracle(const std::vector<double>& g, double p, const std::vector<double>& w, int n) {
  double best = 0.0;
  if (g.size() == 2) {
    const bool first_weak = g[0] <= g[1];
    for (int i = 0; i <= n; ++i) {
      const double a0 = static_cast<double>(i) / n, a1 = 1 - a0;
      double r0, r1;
      if (first_weak) {
        r1 = std::log2(1 + a1 * p * g[1]);
        r0 = std::log2(1 + a0 * p * g[0] / (a1 * p * g[0] + 1));
      } else {
        r0 = std::log2(1 + a0 * p * g[0]);
        r1 = std::log2(1 + a1 * p * g[1] / (a0 * p * g[1] + 1));
      }
      best = std::max(best, w[0] * r0 + w[1] * r1);
    }
    return best;
  }
  // three users: enumerate the simplex grid
  std::vector<std::size_t> idx{0, 1, 2};
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return g[a] < g[b]; });
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j) {
      std::vector<double> a{static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(n - i - j) / n};
      double total = 0.0;
      for (std::size_t pos = 0; pos < 3; ++pos) {
        const auto k = idx[pos];
        double interf = 0.0;
        for (std::size_t later = pos + 1; later < 3; ++later) interf += a[idx[later]] * p;
        total += w[k] * std::log2(1 + a[k] * p * g[k] / (g[k] * interf + 1));
      }
      best = std::max(best, total);
    }
  return best;
}

}  // namespace

TEST_CASE("noma_rates examples") {
  CHECK(noma_rates({{1.0}}, 10.0, {{1.0}})[0] == doctest::Approx(std::log2(11.0)));
  const auto r = noma_rates({{1.0, 0.5}}, 10.0, {{0.2, 0.8}});
  CHECK(r[0] == doctest::Approx(std::log2(3.0)).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(std::log2(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(noma_rates({{1.0, 0.5}}, -1.0, {{0.2, 0.8}}), std::invalid_argument);
  CHECK_THROWS_AS(noma_rates({{1.0, 0.5}}, 1.0, {{0.6, 0.8}}), std::invalid_argument);
}

TEST_CASE("equal-gain NOMA sum rate is constant in the split") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double g = 0.01 + 5 * rng.uniform(), p = 0.1 + 50 * rng.uniform(), a = rng.uniform();
    const auto r = noma_rates({{g, g}}, p, {{a, 1 - a}});
    CHECK(std::abs(r[0] + r[1] - std::log2(1 + p * g)) < 1e-10);
  }
}

TEST_CASE("sic_feasible") {
  const EffectiveGains g{{0.5, 1.0}};
  const std::vector<std::size_t> fwd{0, 1}, rev{1, 0}, bad{0, 0};
  CHECK(sic_feasible(g, fwd));
  CHECK_FALSE(sic_feasible(g, rev));
  const EffectiveGains eq{{0.7, 0.7}};
  CHECK(sic_feasible(eq, fwd));
  CHECK(sic_feasible(eq, rev));
  CHECK_THROWS_AS(sic_feasible(g, bad), std::invalid_argument);
  CHECK(decoding_order(eq) == fwd);
}

TEST_CASE("tdma_rates and fdma_rates examples") {
  const EffectiveGains g{{1.0, 0.5}};
  auto t = tdma_rates(g, 10.0, {{1.0, 0.0}});
  CHECK(t[0] == doctest::Approx(std::log2(11.0)));
  CHECK(t[1] == 0.0);
  t = tdma_rates({{0.8, 0.8}}, 4.0, {{0.5, 0.5}});
  CHECK(t[0] == doctest::Approx(0.5 * std::log2(1 + 3.2)));
  CHECK(t[0] == t[1]);
  t = tdma_rates(g, 10.0, {{0.3, 0.7}});
  CHECK(t[0] == doctest::Approx(0.3 * std::log2(11.0)));
  CHECK(t[1] == doctest::Approx(0.7 * std::log2(6.0)));

  auto f = fdma_rates(g, 10.0, {{1.0, 0.0}}, {{1.0, 0.0}});
  CHECK(f[0] == doctest::Approx(std::log2(11.0)));
  CHECK(f[1] == 0.0);
  f = fdma_rates({{0.8, 0.8}}, 4.0, {{0.5, 0.5}}, {{0.5, 0.5}});
  CHECK(f[0] == doctest::Approx(0.5 * std::log2(1 + 3.2)));
  f = fdma_rates(g, 10.0, {{0.5, 0.5}}, {{0.3, 0.7}});
  CHECK(f[0] == doctest::Approx(0.5 * std::log2(7.0)));
  CHECK(f[1] == doctest::Approx(0.5 * std::log2(8.0)));
  CHECK_THROWS_AS(fdma_rates(g, 10.0, {{1.0, 0.0}}, {{0.5, 0.5}}), std::invalid_argument);
}

TEST_CASE("rates are nondecreasing in power and in own gain") {
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const double g0 = rng.uniform() * 3, g1 = rng.uniform() * 3, p = rng.uniform() * 20;
    const double a = rng.uniform(), b = 0.05 + 0.9 * rng.uniform();
    const EffectiveGains g{{g0, g1}}, g_up{{g0 * 1.5, g1}};
    const PowerSplit split{{a, 1 - a}};
    const ResourceShare share{{b, 1 - b}};
    auto n1 = noma_rates(g, p, split), n2 = noma_rates(g, p * 1.3, split), n3 = noma_rates(g_up, p, split);
    auto t1 = tdma_rates(g, p, share), t2 = tdma_rates(g, p * 1.3, share), t3 = tdma_rates(g_up, p, share);
    auto f1 = fdma_rates(g, p, share, split), f2 = fdma_rates(g, p * 1.3, share, split),
         f3 = fdma_rates(g_up, p, share, split);
    for (int k = 0; k < 2; ++k) {
      CHECK(n2[k] >= n1[k] - 1e-12);
      CHECK(t2[k] >= t1[k] - 1e-12);
      CHECK(f2[k] >= f1[k] - 1e-12);
      CHECK(t3[0] >= t1[0]);
      CHECK(f3[0] >= f1[0]);
    }
    // own-gain monotonicity of NOMA holds while the decoding order is kept
    if ((g0 <= g1) == (g0 * 1.5 <= g1)) CHECK(n3[0] >= n1[0] - 1e-12);
  }
}

TEST_CASE("corner points agree across schemes") {
  const EffectiveGains g{{0.4, 1.7}};
  const double p = 6.0;
  for (int k = 0; k < 2; ++k) {
    std::vector<double> one(2, 0.0);
    one[k] = 1.0;
    const double c = single_user_rate(g[k], p);
    CHECK(noma_rates(g, p, {one})[k] == doctest::Approx(c));
    CHECK(tdma_rates(g, p, {one})[k] == doctest::Approx(c));
    CHECK(fdma_rates(g, p, {one}, {one})[k] == doctest::Approx(c));
  }
}

TEST_CASE("NOMA dominates TDMA at the split matching the strong user's TDMA rate") {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const double gw = rng.uniform() * 2, gs = gw + rng.uniform() * 4, p = 0.5 + rng.uniform() * 100;
    const double tau = rng.uniform();
    const auto t = tdma_rates({{gw, gs}}, p, {{1 - tau, tau}});
    const double alpha = std::expm1(tau * std::log1p(p * gs)) / (p * gs);
    const auto n = noma_rates({{gw, gs}}, p, {{1 - alpha, alpha}});
    CHECK(n[1] >= t[1] - 1e-12);
    CHECK(n[0] >= t[0] - 1e-12);
  }
}

TEST_CASE("exact NOMA weighted-sum-rate allocation") {
  Rng rng(21);
  SUBCASE("matches the power-split grid oracle, K=2 and K=3") {
    for (int i = 0; i < 100; ++i) {
      const std::size_t k = i % 2 == 0 ? 2 : 3;
      std::vector<double> g(k), w(k);
      double wsum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        g[j] = 0.05 + 3 * rng.uniform();
        w[j] = rng.uniform();
        wsum += w[j];
      }
      for (auto& x : w) x /= wsum;
      const double p = 1 + 40 * rng.uniform();
      const auto alloc = noma_max_weighted_sum_rate({g}, p, w);
      const double oracle = noma_grid_oracle(g, p, w, k == 2 ? 4000 : 300);
      CHECK(alloc.value >= oracle - 1e-12);
      CHECK(alloc.value <= oracle + 2e-3 * std::max(1.0, oracle));
      // The returned split reproduces the value through the rate formulas.
      const auto r = noma_rates({g}, p, alloc.split);
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) v += w[j] * r[j];
      CHECK(v == doctest::Approx(alloc.value).epsilon(1e-9));
    }
  }
  SUBCASE("single user and corner weights") {
    CHECK(noma_max_weighted_sum_rate({{2.0}}, 3.0, std::vector<double>{1.0}).value ==
          doctest::Approx(std::log2(7.0)));
    const auto a = noma_max_weighted_sum_rate({{0.5, 2.0, 1.0}}, 3.0, std::vector<double>{1.0, 0.0, 0.0});
    CHECK(a.value == doctest::Approx(std::log2(2.5)));
    CHECK(a.split.fractions[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("exact FDMA weighted-sum-rate allocation") {
  Rng rng(31);
  SUBCASE("within 0.5% of a fine share x split grid, never below a coarse one") {
    for (int i = 0; i < 40; ++i) {
      const double g0 = 0.05 + 3 * rng.uniform(), g1 = 0.05 + 3 * rng.uniform(), p = 1 + 30 * rng.uniform();
      const double w0 = 0.1 + rng.uniform(), w1 = 0.1 + rng.uniform();
      const std::vector<double> w{w0 / (w0 + w1), w1 / (w0 + w1)};
      const auto alloc = fdma_max_weighted_sum_rate({{g0, g1}}, p, w);
      const double coarse = fdma_grid_oracle(g0, g1, p, w[0], w[1], 100);
      const double fine = fdma_grid_oracle(g0, g1, p, w[0], w[1], 1000);
      CHECK(alloc.value >= coarse - 1e-12);
      CHECK(std::abs(alloc.value - fine) <= 0.005 * fine);
      CHECK(alloc.value <= alloc.dual_bound + 1e-9);
      const auto r = fdma_rates({{g0, g1}}, p, alloc.shares, alloc.split);
      CHECK(w[0] * r[0] + w[1] * r[1] == doctest::Approx(alloc.value).epsilon(1e-9));
    }
  }
  SUBCASE("equal weights, equal gains: full-band value, symmetric split") {
    const auto a = fdma_max_weighted_sum_rate({{1.3, 1.3}}, 5.0, std::vector<double>{0.5, 0.5});
    CHECK(a.value == doctest::Approx(0.5 * std::log2(1 + 6.5)).epsilon(1e-9));
  }
  SUBCASE("corner weights give everything to user 0") {
    const auto a = fdma_max_weighted_sum_rate({{0.4, 2.0}}, 5.0, std::vector<double>{1.0, 0.0});
    CHECK(a.shares.fractions[0] == doctest::Approx(1.0));
    CHECK(a.split.fractions[0] == doctest::Approx(1.0));
    CHECK(a.value == doctest::Approx(std::log2(3.0)));
  }
}
