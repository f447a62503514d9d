#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace risnoma {

/// Per-user |h_k|^2 / noise, i.e. received SNR per watt of transmit power.
struct EffectiveGains {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  void validate() const;
};

/// Fractions of the total transmit power, one per user.
struct PowerSplit {
  std::vector<double> fractions;
  void validate(std::size_t users) const;
};

/// Time shares (TDMA) or bandwidth shares (FDMA), one per user.
struct ResourceShare {
  std::vector<double> fractions;
  void validate(std::size_t users) const;
};

/// Rates in bits/s/Hz.
using RateTuple = std::vector<double>;

/// SIC decoding order for a scalar broadcast channel: ascending gain, the
/// lower index counted as weaker on ties. Element 0 is decoded first.
std::vector<std::size_t> decoding_order(const EffectiveGains& gains);

/// Superposition coding with SIC in the degraded order. Each user cancels
/// every weaker user's signal and treats stronger users' signals as noise.
RateTuple noma_rates(const EffectiveGains& gains, double total_power, const PowerSplit& split);

/// True iff `order` visits users by non-decreasing gain.
bool sic_feasible(const EffectiveGains& gains, std::span<const std::size_t> order);

/// Each user transmits at full power during its own slot.
RateTuple tdma_rates(const EffectiveGains& gains, double total_power, const ResourceShare& shares);

/// Noise scales with the bandwidth share: r_k = b_k log2(1 + s_k P g_k / b_k).
RateTuple fdma_rates(const EffectiveGains& gains, double total_power, const ResourceShare& shares,
                     const PowerSplit& split);

double single_user_rate(double gain, double total_power);

struct NomaAllocation {
  double value = 0.0;  // sum_k w_k R_k
  PowerSplit split;
};

/// Exact weighted-sum-rate optimal NOMA power allocation. Writing each
/// user's rate as an integral over the power stacked beneath it, the optimum
/// gives every power layer z in [0, P] to the user maximizing
/// w_k g_k / (1 + g_k z); that envelope walks from the strongest user to the
/// weakest, so it is consistent with the SIC order.
NomaAllocation noma_max_weighted_sum_rate(const EffectiveGains& gains, double total_power,
                                          std::span<const double> weights);

struct FdmaAllocation {
  double value = 0.0;
  ResourceShare shares;
  PowerSplit split;
  double dual_bound = 0.0;
};

/// Weighted-sum-rate optimal FDMA bandwidth and power split. Solved through
/// the one-dimensional dual in the power price mu:
///   min_mu  mu + max_k max_x [w_k log2(1 + P g_k x) - mu x].
FdmaAllocation fdma_max_weighted_sum_rate(const EffectiveGains& gains, double total_power,
                                          std::span<const double> weights);

}  // namespace risnoma
