#include "risnoma/scalar_rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace risnoma {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kFractionTol = 1e-9;

void validate_fractions(const std::vector<double>& f, std::size_t users, const char* what) {
  if (f.size() != users)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(users) + " entries");
  double sum = 0.0;
  for (double v : f) {
    if (!(v >= 0.0 && v <= 1.0 + kFractionTol))
      throw std::invalid_argument(std::string(what) + ": entries must lie in [0, 1]");
    sum += v;
  }
  if (sum > 1.0 + kFractionTol) throw std::invalid_argument(std::string(what) + ": fractions sum above 1");
}

void check_power(double total_power) {
  if (!(total_power >= 0.0)) throw std::invalid_argument("total power must be non-negative");
}

}  // namespace

void EffectiveGains::validate() const {
  if (values.empty()) throw std::invalid_argument("effective gains: at least one user required");
  for (double g : values)
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("effective gains must be finite and >= 0");
}

void PowerSplit::validate(std::size_t users) const { validate_fractions(fractions, users, "power split"); }
void ResourceShare::validate(std::size_t users) const { validate_fractions(fractions, users, "resource share"); }

std::vector<std::size_t> decoding_order(const EffectiveGains& gains) {
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gains[a] < gains[b]; });
  return order;
}

double single_user_rate(double gain, double total_power) { return std::log2(1.0 + total_power * gain); }

RateTuple noma_rates(const EffectiveGains& gains, double total_power, const PowerSplit& split) {
  gains.validate();
  check_power(total_power);
  split.validate(gains.size());
  const auto order = decoding_order(gains);
  RateTuple rates(gains.size(), 0.0);
  // Walk from the strongest user down, accumulating the power of users that
  // are decoded later (and therefore act as interference).
  double stronger_power = 0.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t k = *it;
    const double p = split.fractions[k] * total_power;
    const double g = gains[k];
    rates[k] = std::log2(1.0 + p * g / (g * stronger_power + 1.0));
    stronger_power += p;
  }
  return rates;
}

bool sic_feasible(const EffectiveGains& gains, std::span<const std::size_t> order) {
  const std::size_t n = gains.size();
  if (order.size() != n) throw std::invalid_argument("sic_feasible: order must be a permutation of users");
  std::vector<bool> seen(n, false);
  for (std::size_t k : order) {
    if (k >= n || seen[k]) throw std::invalid_argument("sic_feasible: order must be a permutation of users");
    seen[k] = true;
  }
  for (std::size_t i = 1; i < n; ++i)
    if (gains[order[i - 1]] > gains[order[i]]) return false;
  return true;
}

RateTuple tdma_rates(const EffectiveGains& gains, double total_power, const ResourceShare& shares) {
  gains.validate();
  check_power(total_power);
  shares.validate(gains.size());
  RateTuple rates(gains.size());
  for (std::size_t k = 0; k < rates.size(); ++k)
    rates[k] = shares.fractions[k] * single_user_rate(gains[k], total_power);
  return rates;
}

RateTuple fdma_rates(const EffectiveGains& gains, double total_power, const ResourceShare& shares,
                     const PowerSplit& split) {
  gains.validate();
  check_power(total_power);
  shares.validate(gains.size());
  split.validate(gains.size());
  RateTuple rates(gains.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const double b = shares.fractions[k];
    const double s = split.fractions[k];
    if (b == 0.0) {
      if (s > 0.0) throw std::invalid_argument("fdma_rates: user " + std::to_string(k) + " has power but no bandwidth");
      rates[k] = 0.0;
      continue;
    }
    rates[k] = b * std::log2(1.0 + s * total_power * gains[k] / b);
  }
  return rates;
}

NomaAllocation noma_max_weighted_sum_rate(const EffectiveGains& gains, double total_power,
                                          std::span<const double> weights) {
  gains.validate();
  check_power(total_power);
  const std::size_t n = gains.size();
  if (weights.size() != n) throw std::invalid_argument("weights: one per user required");
  for (double w : weights)
    if (!(w >= 0.0)) throw std::invalid_argument("weights must be non-negative");

  const auto order = decoding_order(gains);
  NomaAllocation out;
  out.split.fractions.assign(n, 0.0);
  if (total_power == 0.0) return out;

  auto utility = [&](std::size_t k, double z) { return weights[k] * gains[k] / (1.0 + gains[k] * z); };

  // Position in `order` of the layer owner at z = 0: the largest marginal
  // utility, ties resolved toward the stronger user.
  std::size_t pos = n - 1;
  for (std::size_t i = n; i-- > 0;)
    if (utility(order[i], 0.0) > utility(order[pos], 0.0)) pos = i;
  if (utility(order[pos], 0.0) == 0.0) {
    // No user can convert power into weighted rate.
    out.split.fractions[order[n - 1]] = 1.0;
    return out;
  }

  double z = 0.0;
  while (true) {
    const std::size_t cur = order[pos];
    const double wc = weights[cur] * gains[cur];
    double next_z = total_power;
    std::size_t next_pos = pos;
    // Only weaker users with a larger weight can overtake the current owner.
    for (std::size_t i = 0; i < pos; ++i) {
      const std::size_t j = order[i];
      const double wj = weights[j] * gains[j];
      if (wj == 0.0 || weights[j] <= weights[cur]) continue;
      const double cross = (wc - wj) / (gains[cur] * gains[j] * (weights[j] - weights[cur]));
      const double at = std::max(cross, z);
      // Ties at the same crossing go to the weakest candidate.
      if (at < next_z || (at == next_z && next_pos != pos && i < next_pos)) {
        next_z = at;
        next_pos = i;
      }
    }
    const double hi = next_pos == pos ? total_power : next_z;
    if (hi > z) {
      out.split.fractions[cur] += (hi - z) / total_power;
      out.value += weights[cur] * (std::log2(1.0 + gains[cur] * hi) - std::log2(1.0 + gains[cur] * z));
    }
    if (next_pos == pos) break;
    z = hi;
    pos = next_pos;
  }
  return out;
}

FdmaAllocation fdma_max_weighted_sum_rate(const EffectiveGains& gains, double total_power,
                                          std::span<const double> weights) {
  gains.validate();
  check_power(total_power);
  const std::size_t n = gains.size();
  if (weights.size() != n) throw std::invalid_argument("weights: one per user required");
  for (double w : weights)
    if (!(w >= 0.0)) throw std::invalid_argument("weights must be non-negative");

  FdmaAllocation out;
  out.shares.fractions.assign(n, 0.0);
  out.split.fractions.assign(n, 0.0);

  std::vector<double> snr(n);  // full-band SNR at full power
  double mu_hi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    snr[k] = total_power * gains[k];
    mu_hi = std::max(mu_hi, weights[k] * snr[k] / kLn2);
  }
  if (mu_hi == 0.0) {
    out.shares.fractions[0] = 1.0;
    out.split.fractions[0] = 1.0;
    return out;
  }

  // Best power-per-bandwidth x and the per-user dual term at price mu.
  auto best_x = [&](std::size_t k, double mu) {
    if (weights[k] * snr[k] == 0.0) return 0.0;
    return std::max(0.0, weights[k] / (mu * kLn2) - 1.0 / snr[k]);
  };
  auto psi = [&](std::size_t k, double mu) {
    const double x = best_x(k, mu);
    return weights[k] * std::log2(1.0 + snr[k] * x) - mu * x;
  };
  auto dual = [&](double mu) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, psi(k, mu));
    return mu + m;
  };

  // Golden-section search on the convex dual.
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0, hi = mu_hi;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = dual(x1), f2 = dual(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * mu_hi; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = dual(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = dual(x2);
    }
  }
  const double mu = 0.5 * (lo + hi);
  out.dual_bound = dual(mu);

  // Primal recovery: users attaining the max dual term share the band so the
  // power budget is met exactly.
  double best_psi = 0.0;
  for (std::size_t k = 0; k < n; ++k) best_psi = std::max(best_psi, psi(k, mu));
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < n; ++k)
    if (weights[k] * snr[k] > 0.0 && psi(k, mu) >= best_psi - 1e-7 * std::max(1.0, best_psi)) active.push_back(k);

  auto consider = [&](std::vector<std::pair<std::size_t, double>> band, const std::vector<double>& xs) {
    double value = 0.0;
    for (std::size_t i = 0; i < band.size(); ++i)
      value += weights[band[i].first] * band[i].second * std::log2(1.0 + snr[band[i].first] * xs[i]);
    if (value > out.value) {
      out.value = value;
      std::fill(out.shares.fractions.begin(), out.shares.fractions.end(), 0.0);
      std::fill(out.split.fractions.begin(), out.split.fractions.end(), 0.0);
      for (std::size_t i = 0; i < band.size(); ++i) {
        out.shares.fractions[band[i].first] = band[i].second;
        out.split.fractions[band[i].first] = band[i].second * xs[i];
      }
    }
  };
  for (std::size_t k : active) consider({{k, 1.0}}, {1.0});
  for (std::size_t a : active) {
    for (std::size_t b : active) {
      const double xa = best_x(a, mu), xb = best_x(b, mu);
      if (!(xa < 1.0 && xb > 1.0)) continue;
      const double bb = (1.0 - xa) / (xb - xa);
      consider({{a, 1.0 - bb}, {b, bb}}, {xa, xb});
    }
  }
  return out;
}

}  // namespace risnoma
