#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "risnoma/channel.hpp"
#include "risnoma/region.hpp"

namespace risnoma {

enum class DeployScheme { SNoma, SFdma, DTdma };

std::string to_string(DeployScheme s);
DeployScheme parse_deploy_scheme(const std::string& s);  // "S-NOMA", "S-FDMA", "D-TDMA"

/// Raised when minimum-rate constraints cannot be met; `deficit` is the
/// time-share overshoot sum_k r_k / C_k - 1 (infinite if some C_k = 0).
class InfeasibleRates : public std::runtime_error {
 public:
  InfeasibleRates(const std::string& what, double deficit) : std::runtime_error(what), deficit_(deficit) {}
  double deficit() const { return deficit_; }

 private:
  double deficit_;
};

/// Static-RIS NOMA: max over the profile set and over power splits of
/// sum_k w_k R_k. Single-antenna BS, one RIS.
double wsr_s_noma(const ChannelSet& channels, std::span<const double> weights, double total_power,
                  const ProfileEnumeration& profile_search);

/// Static-RIS FDMA: max over the profile set and over bandwidth and power
/// splits of sum_k w_k R_k.
double wsr_s_fdma(const ChannelSet& channels, std::span<const double> weights, double total_power,
                  const ProfileEnumeration& profile_search);

/// Dynamic-RIS TDMA: each slot uses the profile aligned to its user. Equal
/// time shares unless `min_rates` is given, in which case the shares solve
///   max sum_k w_k tau_k C_k  s.t.  tau_k C_k >= r_k,  sum_k tau_k <= 1.
double wsr_d_tdma(const ChannelSet& channels, std::span<const double> weights, double total_power,
                  const std::optional<std::vector<double>>& min_rates = std::nullopt);

/// Optimal D-TDMA time shares for the problem above.
std::vector<double> tdma_time_shares(std::span<const double> capacities, std::span<const double> weights,
                                     const std::optional<std::vector<double>>& min_rates);

struct DeploymentProblem {
  NetworkGeometry geometry_template;  // exactly one RIS; its x is overwritten
  std::vector<double> candidate_grid;
  double x_min = 30.0;
  double x_max = 45.0;
  std::vector<double> weights;
  DeployScheme scheme = DeployScheme::SNoma;
  std::size_t channel_draws = 100;
  std::uint64_t seed = 0;

  ChannelModelConfig model;
  std::size_t elements = 8;
  ProfileEnumeration profile_search = ProfileEnumeration::discrete(8, 1);
  bool block_direct = true;
  std::optional<std::vector<double>> min_rates;  // D-TDMA only

  /// 30 to 45 m in 0.25 m steps.
  static std::vector<double> default_grid();
  void validate() const;
};

struct DeploymentPoint {
  double x = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct DeploymentResult {
  std::vector<DeploymentPoint> per_x;
  double optimum_x = 0.0;
  double optimum_value = 0.0;
  std::size_t tied_candidates = 1;  // grid points sharing the maximum; the smallest x wins
};

/// Channels of draw `draw` with the RIS at x. Random streams do not depend on
/// x, so every candidate sees the same small-scale fading.
ChannelSet deployment_channels(const DeploymentProblem& problem, double x, std::uint64_t draw);

/// Scheme objective on one realization.
double deployment_wsr(const DeploymentProblem& problem, const ChannelSet& channels);

DeploymentPoint evaluate_candidate(const DeploymentProblem& problem, double x);

DeploymentResult optimize_deployment(const DeploymentProblem& problem);

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

}  // namespace risnoma
