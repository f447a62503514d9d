#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "risnoma/channel.hpp"

namespace risnoma {

// Channels are rows: user k receives h_k^T w from the transmit vector w,
// matching equivalent_channel().

struct BeamformerSet {
  std::vector<CVector> vectors;
  double total_power() const;
};

struct SicRateTriple {
  double r_mm = 0.0;  // user m decoding its own signal
  double r_nm = 0.0;  // user n decoding user m's signal before SIC
  double r_nn = 0.0;  // user n decoding its own signal after SIC
};

SicRateTriple sic_rate_triple(const CVector& h_m, const CVector& h_n, const CVector& w_m, const CVector& w_n,
                              double noise);

/// r_nm >= r_mm: user n can cancel user m's signal.
bool sic_condition(const SicRateTriple& triple);

class InfeasibleTargets : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SinrTargets {
  double m = 1.0;  // weak user, decoded first
  double n = 1.0;  // strong user
};

struct PowerMinSolution {
  BeamformerSet beamformers;  // {w_m, w_n}
  double power = 0.0;
  double dual_bound = 0.0;    // lower bound from the relaxation
  double gap = 0.0;           // power - dual_bound
  bool rank_one = true;       // relaxation returned (numerically) rank-1 matrices
  bool randomized = false;    // Gaussian randomization supplied the directions
  bool certified = false;     // all constraints re-checked to 1e-6
};

/// Minimum total power with SIC-consistent decoding of user m:
///   SINR_mm = t_m,  SINR_nm >= t_m,  SINR_nn >= t_n.
/// The first two make user m's signal decodable at both receivers and keep
/// r_nm >= r_mm. Solved through the semidefinite relaxation's dual with a
/// log-barrier Newton method. The direction of w_n comes from the null
/// space of the dual slack matrix; given it, p_n meets t_n with equality and
/// w_m is the exact minimum-norm solution. The SIC row keeps a relative
/// SINR headroom of 2e-9 so r_nm > r_mm survives rounding.
PowerMinSolution active_power_min(const CVector& h_m, const CVector& h_n, SinrTargets targets, double noise,
                                  std::uint64_t seed = 0);

/// Least total power when only the direction of w_n is fixed: p_n meets t_n
/// with equality and w_m is the exact minimum-norm solution (infinity if
/// none). The beamformers are returned through `out`.
double power_given_direction(const CVector& h_m, const CVector& h_n, const CVector& u_n, SinrTargets targets,
                             double noise, BeamformerSet* out = nullptr);

/// Least total power for fixed unit directions u_m, u_n (infinity if none),
/// with a = |h_m u_m|^2, b = |h_m u_n|^2, c = |h_n u_m|^2, d = |h_n u_n|^2.
/// SINR_nm must exceed SINR_mm by a relative 1e-9. Returns the powers
/// through p_m, p_n.
double fixed_direction_power(double a, double b, double c, double d, SinrTargets targets, double noise,
                             double* p_m = nullptr, double* p_n = nullptr);

// ---------------------------------------------------------------------------
// Passive (RIS) step

/// Complex link terms s_i(theta) = c_i + sum_j theta_j d_ij over the
/// concatenated elements of every RIS.
struct LinkTerms {
  CVector constant;  // c, one per link
  CMatrix slope;     // d, links x elements
};

/// A scalar objective of the complex link values s_i, to be maximized.
struct LinkObjective {
  std::function<double(std::span<const std::complex<double>>)> value;
  /// When set, the objective is increasing in the power of this one link
  /// only, and per-element updates use the closed-form co-phasing rule.
  std::optional<std::size_t> single_link;
};

struct CoordinateOptions {
  std::size_t max_sweeps = 100;
  double tolerance = 1e-10;   // relative per-sweep improvement
  std::size_t grid = 64;      // continuous phases: grid points before golden refinement
};

/// Element-wise coordinate ascent. Profiles with resolution bits search
/// their 2^B levels exactly; continuous profiles use the closed form or a
/// grid plus golden-section search. Updates are kept only if they improve
/// the objective by more than a relative 1e-13; sweeps stop once the
/// relative improvement falls below `tolerance`.
std::vector<RisProfile> coordinate_ascent(const LinkTerms& links, const LinkObjective& objective,
                                          std::vector<RisProfile> start, const CoordinateOptions& options = {});

double evaluate_links(const LinkTerms& links, std::span<const RisProfile> profiles, const LinkObjective& objective);

enum class PassiveObjective { MinPowerMargin, WeightedSumRate };

struct PassiveSpec {
  PassiveObjective objective = PassiveObjective::MinPowerMargin;
  std::size_t weak = 0;     // user m
  std::size_t strong = 1;   // user n
  SinrTargets targets;      // MinPowerMargin
  double weight_m = 0.5;    // WeightedSumRate
  double weight_n = 0.5;
  double noise = 1.0;
};

/// Equivalent channels of the two users as link terms: rows 0..N_t-1 hold
/// h_m, rows N_t..2N_t-1 hold h_n.
LinkTerms two_user_links(const ChannelSet& channels, std::size_t weak, std::size_t strong);

/// MinPowerMargin: current power over the least power needed on the new
/// channels (>= 1 means the targets are met with room to spare). The least
/// power is the better of keeping w_n's direction and a scan over the
/// one-parameter family (I + mu h_m^* h_m^T)^{-1} h_n^* that contains the
/// optimal direction.
/// WeightedSumRate: w_m r_mm + w_n r_nn where the SIC condition holds,
/// minus infinity elsewhere, so the search never leaves the decodable set.
LinkObjective passive_objective(const PassiveSpec& spec, const BeamformerSet& beamformers);

RisProfile passive_update(const ChannelSet& channels, const BeamformerSet& beamformers, const RisProfile& profile,
                          const PassiveSpec& spec, const CoordinateOptions& options = {});

double passive_value(const ChannelSet& channels, const BeamformerSet& beamformers, const RisProfile& profile,
                     const PassiveSpec& spec);

// ---------------------------------------------------------------------------
// Alternating design

enum class DesignMode { PowerMin, WeightedSumRate };

struct AlternatingConfig {
  DesignMode mode = DesignMode::PowerMin;
  SinrTargets targets;            // PowerMin
  double weight_m = 0.5;          // WeightedSumRate
  double weight_n = 0.5;
  double power_budget = 1.0;      // WeightedSumRate
  double noise = 1.0;
  std::size_t max_iters = 50;
  double tolerance = 1e-8;        // relative change of the objective
  std::optional<int> bits;        // RIS phase resolution; empty = continuous
  bool reorder_each_iteration = false;  // experimental
  bool multi_start = true;        // also start from each user's gain-maximizing profile
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;
  double sic_margin = 0.0;  // r_nm - r_mm
  double power = 0.0;
};

struct AlternatingResult {
  BeamformerSet beamformers;  // {w_m, w_n}
  RisProfile profile;
  std::size_t weak = 0;
  std::size_t strong = 1;
  std::vector<TraceRow> trace;
  double objective = 0.0;
  bool sic_ok = false;
  bool converged = false;
};

/// Two users, one RIS. Each run starts from a profile (the unit profile, plus
/// each user's gain-maximizing profile when multi_start is set) and fixes the
/// decoding order from that profile's equivalent channel norms (weaker = m)
/// unless reorder_each_iteration is set. The best run is returned.
AlternatingResult alternating_design(const ChannelSet& channels, const AlternatingConfig& config);

/// Largest w_m min(r_mm, r_nm) + w_n r_nn within the power budget for fixed
/// channels, by a search over SINR targets on top of active_power_min.
PowerMinSolution wsr_active_step(const CVector& h_m, const CVector& h_n, double weight_m, double weight_n,
                                 double power_budget, double noise, double* value = nullptr);

}  // namespace risnoma
