#include "risnoma/deployment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "risnoma/scalar_rates.hpp"

namespace risnoma {

namespace {

void check_weights(std::span<const double> weights, std::size_t users) {
  if (weights.size() != users) throw std::invalid_argument("weights: one per user required");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and >= 0");
}

void check_static(const ChannelSet& channels, const ProfileEnumeration& search) {
  channels.validate();
  if (channels.antennas() != 1) throw std::invalid_argument("static schemes need a single-antenna BS");
  if (channels.ris_count() > 1) throw std::invalid_argument("static schemes support at most one RIS");
  if (channels.elements(0) != search.elements)
    throw std::invalid_argument("profile search elements do not match the RIS");
  if (search.size() == 0) throw std::invalid_argument("empty profile enumeration");
}

template <class Solve>
double best_over_profiles(const ChannelSet& channels, const ProfileEnumeration& search, Solve&& solve) {
  const std::uint64_t n = search.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < n; ++i) {
    const EffectiveGains gains{effective_gains(channels, search.profile(i))};
    best = std::max(best, solve(gains));
  }
  return best;
}

}  // namespace

std::string to_string(DeployScheme s) {
  switch (s) {
    case DeployScheme::SNoma: return "S-NOMA";
    case DeployScheme::SFdma: return "S-FDMA";
    case DeployScheme::DTdma: return "D-TDMA";
  }
  return "?";
}

DeployScheme parse_deploy_scheme(const std::string& s) {
  if (s == "S-NOMA") return DeployScheme::SNoma;
  if (s == "S-FDMA") return DeployScheme::SFdma;
  if (s == "D-TDMA") return DeployScheme::DTdma;
  throw std::invalid_argument("unknown deployment scheme '" + s + "' (expected S-NOMA, S-FDMA or D-TDMA)");
}

double wsr_s_noma(const ChannelSet& channels, std::span<const double> weights, double total_power,
                  const ProfileEnumeration& profile_search) {
  check_static(channels, profile_search);
  check_weights(weights, channels.users());
  return best_over_profiles(channels, profile_search, [&](const EffectiveGains& g) {
    return noma_max_weighted_sum_rate(g, total_power, weights).value;
  });
}

double wsr_s_fdma(const ChannelSet& channels, std::span<const double> weights, double total_power,
                  const ProfileEnumeration& profile_search) {
  check_static(channels, profile_search);
  check_weights(weights, channels.users());
  return best_over_profiles(channels, profile_search, [&](const EffectiveGains& g) {
    return fdma_max_weighted_sum_rate(g, total_power, weights).value;
  });
}

std::vector<double> tdma_time_shares(std::span<const double> capacities, std::span<const double> weights,
                                     const std::optional<std::vector<double>>& min_rates) {
  const std::size_t k = capacities.size();
  check_weights(weights, k);
  std::vector<double> tau(k, 0.0);
  if (!min_rates) {
    std::fill(tau.begin(), tau.end(), 1.0 / static_cast<double>(k));
    return tau;
  }
  if (min_rates->size() != k) throw std::invalid_argument("min_rates: one per user required");
  double used = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = (*min_rates)[i];
    if (!(r >= 0.0)) throw std::invalid_argument("min_rates must be >= 0");
    if (r == 0.0) continue;
    if (capacities[i] <= 0.0)
      throw InfeasibleRates("min_rates infeasible: user " + std::to_string(i) + " has zero capacity",
                            std::numeric_limits<double>::infinity());
    tau[i] = r / capacities[i];
    used += tau[i];
  }
  if (used > 1.0 + 1e-12)
    throw InfeasibleRates("min_rates infeasible: time shares exceed 1 by " + std::to_string(used - 1.0), used - 1.0);
  // The objective is linear in tau, so the leftover time goes to the user
  // with the largest weighted capacity (lowest index on ties).
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (weights[i] * capacities[i] > weights[best] * capacities[best]) best = i;
  tau[best] += std::max(0.0, 1.0 - used);
  return tau;
}

double wsr_d_tdma(const ChannelSet& channels, std::span<const double> weights, double total_power,
                  const std::optional<std::vector<double>>& min_rates) {
  channels.validate();
  if (channels.antennas() != 1) throw std::invalid_argument("D-TDMA needs a single-antenna BS");
  if (channels.ris_count() > 1) throw std::invalid_argument("D-TDMA supports at most one RIS");
  const std::size_t k = channels.users();
  check_weights(weights, k);
  std::vector<double> cap(k);
  for (std::size_t i = 0; i < k; ++i) {
    double amp = std::abs(channels.direct[i](0));
    if (channels.ris_count() == 1)
      amp = coherent_bound(channels.direct[i](0), channels.ris_user[0][i], channels.bs_ris[0].col(0));
    cap[i] = single_user_rate(amp * amp, total_power);
  }
  const auto tau = tdma_time_shares(cap, weights, min_rates);
  std::vector<double> terms(k);
  for (std::size_t i = 0; i < k; ++i) terms[i] = weights[i] * tau[i] * cap[i];
  return pairwise_sum(terms);
}

// ---------------------------------------------------------------------------

std::vector<double> DeploymentProblem::default_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 60; ++i) g.push_back(30.0 + 0.25 * i);
  return g;
}

void DeploymentProblem::validate() const {
  geometry_template.validate();
  if (geometry_template.ris.size() != 1) throw std::invalid_argument("deployment: exactly one RIS required");
  if (candidate_grid.empty()) throw std::invalid_argument("deployment: candidate_grid is empty");
  for (double x : candidate_grid)
    if (!(x >= x_min && x <= x_max))
      throw std::invalid_argument("deployment: candidate x=" + std::to_string(x) + " outside [" +
                                  std::to_string(x_min) + ", " + std::to_string(x_max) + "]");
  const std::size_t k = geometry_template.users.size();
  check_weights(weights, k);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("deployment: weights must sum to 1");
  if (channel_draws == 0) throw std::invalid_argument("deployment: channel_draws must be >= 1");
  if (scheme != DeployScheme::DTdma) {
    if (profile_search.elements != elements)
      throw std::invalid_argument("deployment: profile search elements do not match the RIS");
    profile_search.validate();
  }
  if (min_rates && scheme != DeployScheme::DTdma)
    throw std::invalid_argument("deployment: min_rates apply to D-TDMA only");
}

ChannelSet deployment_channels(const DeploymentProblem& problem, double x, std::uint64_t draw) {
  NetworkGeometry geom = problem.geometry_template;
  geom.ris[0].x = x;
  ChannelLayout layout;
  layout.antennas = 1;
  layout.elements = {problem.elements};
  layout.blocked_direct.assign(geom.users.size(), problem.block_direct);
  return generate_channels(geom, problem.model, layout, problem.seed, draw);
}

double deployment_wsr(const DeploymentProblem& problem, const ChannelSet& channels) {
  const double p = problem.model.tx_power_watts();
  switch (problem.scheme) {
    case DeployScheme::SNoma: return wsr_s_noma(channels, problem.weights, p, problem.profile_search);
    case DeployScheme::SFdma: return wsr_s_fdma(channels, problem.weights, p, problem.profile_search);
    case DeployScheme::DTdma: return wsr_d_tdma(channels, problem.weights, p, problem.min_rates);
  }
  return 0.0;
}

DeploymentPoint evaluate_candidate(const DeploymentProblem& problem, double x) {
  std::vector<double> values(problem.channel_draws);
  for (std::size_t d = 0; d < values.size(); ++d)
    values[d] = deployment_wsr(problem, deployment_channels(problem, x, d));
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t d = 0; d < values.size(); ++d) sq[d] = (values[d] - mean) * (values[d] - mean);
  const double var = values.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  return {x, mean, std::sqrt(var / n)};
}

DeploymentResult optimize_deployment(const DeploymentProblem& problem) {
  problem.validate();
  std::vector<double> grid = problem.candidate_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  DeploymentResult out;
  for (double x : grid) out.per_x.push_back(evaluate_candidate(problem, x));
  out.optimum_x = out.per_x.front().x;
  out.optimum_value = out.per_x.front().mean;
  out.tied_candidates = 1;
  for (std::size_t i = 1; i < out.per_x.size(); ++i) {
    const auto& c = out.per_x[i];
    if (c.mean > out.optimum_value) {
      out.optimum_x = c.x;
      out.optimum_value = c.mean;
      out.tied_candidates = 1;
    } else if (c.mean == out.optimum_value) {
      ++out.tied_candidates;
    }
  }
  return out;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace risnoma
