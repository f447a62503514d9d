#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "risnoma/rng.hpp"

namespace risnoma {

using cd = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Point3& a, const Point3& b);

/// Positions of the base station, the RIS panels and the users, in meters.
struct NetworkGeometry {
  Point3 bs;
  std::vector<Point3> ris;
  std::vector<Point3> users;

  /// Throws std::invalid_argument on negative heights, non-finite
  /// coordinates or an empty user list.
  void validate() const;
};

enum class FadingModel { Rayleigh, Rician };

struct FadingSpec {
  FadingModel model = FadingModel::Rayleigh;
  double rician_k = 0.0;          // linear LoS-to-scatter power ratio
  double path_loss_exponent = 2.0;
  double reference_loss_db = 30.0;  // loss at 1 m

  void validate() const;
};

/// Conventional defaults for direct (Rayleigh) and reflected (Rician) links.
FadingSpec default_direct_fading();
FadingSpec default_reflected_fading();

/// Per-element reflection coefficients of one RIS panel.
/// `resolution_bits` is empty for continuous phase control.
struct RisProfile {
  CVector coefficients;
  std::optional<int> resolution_bits;

  std::size_t size() const { return static_cast<std::size_t>(coefficients.size()); }

  /// All coefficients equal to 1 (phase 0, lossless).
  static RisProfile unit(std::size_t elements, std::optional<int> bits = std::nullopt);
  static RisProfile from_phases(std::span<const double> phases,
                                std::optional<int> bits = std::nullopt);
  /// Profile whose element m uses phase level levels[m] of a B-bit shifter.
  static RisProfile from_levels(std::span<const int> levels, int bits);

  std::vector<double> phases() const;
  std::vector<double> amplitudes() const;

  /// Checks |coefficient| <= 1 and, for discrete profiles, that every phase
  /// lies on the 2^B grid (to `tol` radians).
  void validate(double tol = 1e-9) const;
};

/// Nearest B-bit phase for every element; amplitudes are kept.
RisProfile quantize(const RisProfile& profile, int bits);

/// One channel realization.
///
/// Links are stored in "row" form: the signal received by user k from the
/// transmit vector x is `direct[k].transpose() * x` plus the reflected part
/// `ris_user[r][k]^H * diag(theta_r) * bs_ris[r] * x`.
struct ChannelSet {
  std::vector<CVector> direct;                 // K vectors of length N_t
  std::vector<CMatrix> bs_ris;                 // per RIS, M_r x N_t
  std::vector<std::vector<CVector>> ris_user;  // [r][k], length M_r
  std::vector<bool> blocked_direct;

  std::size_t users() const { return direct.size(); }
  std::size_t antennas() const;
  std::size_t ris_count() const { return bs_ris.size(); }
  std::size_t elements(std::size_t ris = 0) const;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Operations

/// Distance-based large-scale power gain 10^(-L0/10) * d^(-alpha).
double path_loss(double distance_m, const FadingSpec& spec);

/// Small-scale fading vector. For Rician links `los` supplies the unit-modulus
/// deterministic component; it is ignored for Rayleigh.
CVector sample_channel(std::size_t dimension, const FadingSpec& spec, const CVector& los,
                       Rng& rng);

/// direct + ris_user^H diag(theta) bs_ris, returned as a length-N_t row.
CVector equivalent_channel(const CVector& direct, const CVector& ris_user,
                           const CMatrix& bs_ris, const RisProfile& profile);

/// Equivalent channel of user k with every RIS in the set configured.
CVector equivalent_channel(const ChannelSet& channels, std::size_t user,
                           std::span<const RisProfile> profiles);

/// Continuous profile that co-phases every cascaded term with the direct link
/// (phase 0 when the direct link is zero). Single-antenna BS.
RisProfile align_phases(cd direct, const CVector& ris_user, const CVector& bs_ris);

/// |direct| + sum_m |g_m||f_m|: the largest equivalent-channel magnitude any
/// unit-amplitude profile can produce.
double coherent_bound(cd direct, const CVector& ris_user, const CVector& bs_ris);

/// Far-field response of an N-element half-wavelength ULA.
CVector ula_response(std::size_t elements, double cos_angle);

// ---------------------------------------------------------------------------
// Geometry-driven channel generation

struct ChannelModelConfig {
  FadingSpec direct = default_direct_fading();
  FadingSpec reflected = default_reflected_fading();
  double noise_dbm = -80.0;
  double tx_power_dbm = 20.0;

  double noise_watts() const;
  double tx_power_watts() const;
};

double dbm_to_watts(double dbm);

struct ChannelLayout {
  std::size_t antennas = 1;
  std::vector<std::size_t> elements;  // per RIS
  std::vector<bool> blocked_direct;   // per user; empty = none blocked
};

/// Draws one realization for `geometry`. Every link is scaled by
/// sqrt(path_loss / noise_watts), so |h|^2 is an SNR per watt of transmit
/// power. Each link has its own random stream keyed by (draw, user, link).
ChannelSet generate_channels(const NetworkGeometry& geometry, const ChannelModelConfig& model,
                             const ChannelLayout& layout, std::uint64_t seed,
                             std::uint64_t draw);

/// Scalar effective gains |h_k|^2 for a single-antenna BS and one RIS.
std::vector<double> effective_gains(const ChannelSet& channels, const RisProfile& profile);

}  // namespace risnoma
