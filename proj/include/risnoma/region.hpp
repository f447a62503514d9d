#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "risnoma/channel.hpp"
#include "risnoma/scalar_rates.hpp"

namespace risnoma {

enum class Scheme { NOMA, TDMA, FDMA };
enum class ConfigMode { Static, Dynamic };

std::string to_string(Scheme s);
std::string to_string(ConfigMode m);
Scheme parse_scheme(const std::string& s);
ConfigMode parse_config_mode(const std::string& s);

using Point2 = std::array<double, 2>;

/// The set of RIS profiles a static region (or a static deployment search)
/// ranges over.
struct ProfileEnumeration {
  enum class Kind { DiscreteExhaustive, ContinuousSampled };

  Kind kind = Kind::DiscreteExhaustive;
  std::size_t elements = 0;
  int bits = 1;                       // DiscreteExhaustive
  std::uint64_t count = 1;            // ContinuousSampled
  std::uint64_t seed = 0;             // ContinuousSampled
  std::uint64_t cap = std::uint64_t{1} << 20;

  static ProfileEnumeration discrete(std::size_t elements, int bits);
  static ProfileEnumeration sampled(std::size_t elements, std::uint64_t count, std::uint64_t seed);

  /// Number of profiles; throws std::length_error naming the cap when an
  /// exhaustive enumeration would exceed it.
  std::uint64_t size() const;
  RisProfile profile(std::uint64_t index) const;
  std::string describe() const;
  void validate() const;
};

struct RegionSampling {
  std::size_t boundary_samples = 201;  // NOMA/TDMA sweep points
  std::size_t fdma_grid = 101;         // per axis of the FDMA share x split grid
};

/// A sampled rate region, understood as the downward closure of its points.
///
/// For two users `boundary` is the Pareto frontier sorted by ascending R1.
/// `pieces` holds convex inner approximations (upper-right hull chains from
/// (0, y_max) to (x_max, 0)); a static region has one per profile, since the
/// region of every fixed channel is convex, and a dynamic region has exactly
/// one. Containment uses both the points and the pieces.
struct RateRegion {
  std::size_t users = 2;
  Scheme scheme = Scheme::NOMA;
  ConfigMode mode = ConfigMode::Static;
  std::vector<RateTuple> points;
  std::vector<RateTuple> boundary;
  std::vector<std::vector<Point2>> pieces;
  std::uint64_t profiles = 0;  // profiles behind the region
};

/// Rate tuples one scheme reaches on fixed gains, sweeping its resource
/// parameter. For two users the NOMA sweep places the power split so that
/// the stronger user's rate is evenly spaced, which makes sample i dominate
/// TDMA sample i exactly.
std::vector<RateTuple> sweep_scheme(const EffectiveGains& gains, Scheme scheme, double total_power,
                                    const RegionSampling& sampling);

RateRegion static_region(const ChannelSet& channels, const ProfileEnumeration& enumeration,
                         Scheme scheme, double total_power, const RegionSampling& sampling = {});

/// Convex hull, with downward closure, of the union of the inputs: the
/// region reached by time sharing across RIS configurations.
RateRegion dynamic_region(std::span<const RateRegion> static_regions);

bool contains(const RateRegion& region, std::span<const double> point, double tolerance);

/// Area under the boundary polyline, extended horizontally to the R2 axis
/// and vertically to the R1 axis. Two users only.
double region_area(const RateRegion& region);

// Planar helpers, exposed for testing.

/// Strictly non-dominated subset, sorted by ascending first coordinate.
std::vector<Point2> pareto_frontier(std::vector<Point2> pts);

/// Upper-right hull chain of the downward closure of `pts`, from (0, y_max)
/// to (x_max, 0). Collinear points are dropped.
std::vector<Point2> downward_hull(const std::vector<Point2>& pts);

/// Point-in-downward-closed-convex-chain test (chain as from downward_hull).
bool under_chain(const std::vector<Point2>& chain, Point2 p);

}  // namespace risnoma
