#include "risnoma/region.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace risnoma {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// All compositions of `total` into `parts` non-negative integers.
void lattice(std::size_t parts, std::size_t total, std::vector<std::size_t>& cur,
             std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() + 1 == parts) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t i = 0; i <= total; ++i) {
    cur.push_back(i);
    lattice(parts, total - i, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<double>> simplex_grid(std::size_t parts, std::size_t resolution) {
  std::vector<std::vector<std::size_t>> raw;
  std::vector<std::size_t> cur;
  lattice(parts, resolution, cur, raw);
  std::vector<std::vector<double>> out;
  out.reserve(raw.size());
  for (const auto& r : raw) {
    std::vector<double> f(parts);
    for (std::size_t k = 0; k < parts; ++k) f[k] = static_cast<double>(r[k]) / static_cast<double>(resolution);
    out.push_back(std::move(f));
  }
  return out;
}

double grid_value(std::size_t i, std::size_t n) {
  return n <= 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
}

// Two-user sweep without per-sample allocation.
std::vector<Point2> sweep_two_users(const EffectiveGains& gains, Scheme scheme, double power,
                                    const RegionSampling& sampling) {
  std::vector<Point2> out;
  const double g0 = gains[0], g1 = gains[1];
  switch (scheme) {
    case Scheme::NOMA: {
      const auto order = decoding_order(gains);
      const std::size_t weak = order[0], strong = order[1];
      const double x = power * gains[strong];
      const std::size_t n = sampling.boundary_samples;
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = grid_value(i, n);
        // Power fraction giving the strong user t * log2(1 + x).
        double alpha = x > 0.0 ? std::expm1(t * std::log1p(x)) / x : t;
        alpha = i + 1 == n ? 1.0 : std::clamp(alpha, 0.0, 1.0);
        PowerSplit split;
        split.fractions.assign(2, 0.0);
        split.fractions[strong] = alpha;
        split.fractions[weak] = 1.0 - alpha;
        const auto r = noma_rates(gains, power, split);
        out.push_back({r[0], r[1]});
      }
      break;
    }
    case Scheme::TDMA: {
      const double c0 = single_user_rate(g0, power), c1 = single_user_rate(g1, power);
      const std::size_t n = sampling.boundary_samples;
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double tau = grid_value(i, n);
        out.push_back({tau * c0, (1.0 - tau) * c1});
      }
      break;
    }
    case Scheme::FDMA: {
      const std::size_t n = sampling.fdma_grid;
      out.reserve(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double b0 = grid_value(i, n), b1 = 1.0 - b0;
        for (std::size_t j = 0; j < n; ++j) {
          const double s0 = grid_value(j, n), s1 = 1.0 - s0;
          if ((b0 == 0.0 && s0 > 0.0) || (b1 == 0.0 && s1 > 0.0)) continue;
          const double r0 = b0 == 0.0 ? 0.0 : b0 * std::log2(1.0 + s0 * power * g0 / b0);
          const double r1 = b1 == 0.0 ? 0.0 : b1 * std::log2(1.0 + s1 * power * g1 / b1);
          out.push_back({r0, r1});
        }
      }
      break;
    }
  }
  return out;
}

std::vector<RateTuple> nondominated(const std::vector<RateTuple>& pts) {
  std::vector<RateTuple> sorted = pts;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<RateTuple> front;
  for (const auto& p : sorted) {
    bool dominated = false;
    for (const auto& f : front) {
      if (std::equal(p.begin(), p.end(), f.begin(), [](double a, double b) { return a <= b; })) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }
  return front;
}

std::vector<RateTuple> to_tuples(const std::vector<Point2>& pts) {
  std::vector<RateTuple> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p[0], p[1]});
  return out;
}

std::vector<Point2> to_points(const std::vector<RateTuple>& pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p[0], p[1]});
  return out;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::NOMA: return "NOMA";
    case Scheme::TDMA: return "TDMA";
    case Scheme::FDMA: return "FDMA";
  }
  return "?";
}

std::string to_string(ConfigMode m) { return m == ConfigMode::Static ? "Static" : "Dynamic"; }

Scheme parse_scheme(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "NOMA") return Scheme::NOMA;
  if (u == "TDMA") return Scheme::TDMA;
  if (u == "FDMA") return Scheme::FDMA;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

ConfigMode parse_config_mode(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (u == "static") return ConfigMode::Static;
  if (u == "dynamic") return ConfigMode::Dynamic;
  throw std::invalid_argument("unknown configuration mode '" + s + "'");
}

// ---------------------------------------------------------------------------

ProfileEnumeration ProfileEnumeration::discrete(std::size_t elements, int bits) {
  ProfileEnumeration e;
  e.kind = Kind::DiscreteExhaustive;
  e.elements = elements;
  e.bits = bits;
  return e;
}

ProfileEnumeration ProfileEnumeration::sampled(std::size_t elements, std::uint64_t count, std::uint64_t seed) {
  ProfileEnumeration e;
  e.kind = Kind::ContinuousSampled;
  e.elements = elements;
  e.count = count;
  e.seed = seed;
  return e;
}

void ProfileEnumeration::validate() const {
  if (kind == Kind::DiscreteExhaustive) {
    if (bits < 1 || bits > 16) throw std::invalid_argument("enumeration: bits must be in [1, 16]");
  } else if (count < 1) {
    throw std::invalid_argument("enumeration: sampled count must be >= 1");
  }
  (void)size();
}

std::uint64_t ProfileEnumeration::size() const {
  if (elements == 0) return 1;
  if (kind == Kind::ContinuousSampled) return count;
  const std::uint64_t exponent = static_cast<std::uint64_t>(bits) * elements;
  const std::uint64_t cap_exp = cap == 0 ? 0 : static_cast<std::uint64_t>(std::bit_width(cap) - 1);
  if (exponent >= 63 || (std::uint64_t{1} << exponent) > cap)
    throw std::length_error("profile enumeration of 2^" + std::to_string(exponent) +
                            " profiles exceeds the cap of " + std::to_string(cap) + " (2^" +
                            std::to_string(cap_exp) + ")");
  return std::uint64_t{1} << exponent;
}

RisProfile ProfileEnumeration::profile(std::uint64_t index) const {
  if (index >= size()) throw std::out_of_range("profile index out of range");
  if (kind == Kind::DiscreteExhaustive) {
    std::vector<int> levels(elements);
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    for (std::size_t m = 0; m < elements; ++m) levels[m] = static_cast<int>((index >> (bits * m)) & mask);
    return RisProfile::from_levels(levels, bits);
  }
  auto rng = Rng::stream(seed, {index, 0, 0x5151});
  std::vector<double> phases(elements);
  for (auto& p : phases) p = 2.0 * std::numbers::pi * rng.uniform();
  return RisProfile::from_phases(phases);
}

std::string ProfileEnumeration::describe() const {
  if (kind == Kind::DiscreteExhaustive)
    return "DiscreteExhaustive(bits=" + std::to_string(bits) + ",elements=" + std::to_string(elements) + ")";
  return "ContinuousSampled(count=" + std::to_string(count) + ",seed=" + std::to_string(seed) +
         ",elements=" + std::to_string(elements) + ")";
}

// ---------------------------------------------------------------------------

std::vector<Point2> pareto_frontier(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a[0] != b[0] ? a[0] > b[0] : a[1] > b[1];
  });
  std::vector<Point2> front;
  double best_y = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p[1] > best_y) {
      front.push_back(p);
      best_y = p[1];
    }
  }
  std::reverse(front.begin(), front.end());
  return front;
}

std::vector<Point2> downward_hull(const std::vector<Point2>& pts) {
  const auto front = pareto_frontier(pts);
  if (front.empty()) return {};
  std::vector<Point2> seq;
  seq.reserve(front.size() + 2);
  if (front.front()[0] > 0.0) seq.push_back({0.0, front.front()[1]});
  seq.insert(seq.end(), front.begin(), front.end());
  if (front.back()[1] > 0.0) seq.push_back({front.back()[0], 0.0});

  std::vector<Point2> hull;
  for (const auto& p : seq) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  return hull;
}

bool under_chain(const std::vector<Point2>& chain, Point2 p) {
  if (chain.empty()) return false;
  const double x = std::max(p[0], 0.0), y = std::max(p[1], 0.0);
  if (x > chain.back()[0] || y > chain.front()[1]) return false;
  const auto it = std::lower_bound(chain.begin(), chain.end(), x,
                                   [](const Point2& v, double value) { return v[0] < value; });
  if (it == chain.begin()) return y <= chain.front()[1];
  const Point2& a = *(it - 1);
  const Point2& b = *it;
  return cross(a, b, {x, y}) <= 0.0;
}

std::vector<RateTuple> sweep_scheme(const EffectiveGains& gains, Scheme scheme, double total_power,
                                    const RegionSampling& sampling) {
  gains.validate();
  if (!(total_power >= 0.0)) throw std::invalid_argument("total power must be non-negative");
  if (sampling.boundary_samples < 2 || sampling.fdma_grid < 2)
    throw std::invalid_argument("sampling: at least two samples per sweep dimension");
  const std::size_t k_users = gains.size();
  if (k_users == 2) return to_tuples(sweep_two_users(gains, scheme, total_power, sampling));

  std::vector<RateTuple> out;
  if (k_users == 1) {
    out.push_back({single_user_rate(gains[0], total_power)});
    return out;
  }
  switch (scheme) {
    case Scheme::NOMA:
      for (auto& f : simplex_grid(k_users, sampling.boundary_samples - 1))
        out.push_back(noma_rates(gains, total_power, PowerSplit{std::move(f)}));
      break;
    case Scheme::TDMA:
      for (auto& f : simplex_grid(k_users, sampling.boundary_samples - 1))
        out.push_back(tdma_rates(gains, total_power, ResourceShare{std::move(f)}));
      break;
    case Scheme::FDMA: {
      const auto grid = simplex_grid(k_users, sampling.fdma_grid - 1);
      for (const auto& b : grid) {
        for (const auto& s : grid) {
          bool valid = true;
          for (std::size_t k = 0; k < k_users; ++k) valid = valid && !(b[k] == 0.0 && s[k] > 0.0);
          if (valid) out.push_back(fdma_rates(gains, total_power, ResourceShare{b}, PowerSplit{s}));
        }
      }
      break;
    }
  }
  return out;
}

RateRegion static_region(const ChannelSet& channels, const ProfileEnumeration& enumeration,
                         Scheme scheme, double total_power, const RegionSampling& sampling) {
  channels.validate();
  enumeration.validate();
  if (channels.ris_count() > 1) throw std::invalid_argument("static_region: at most one RIS");
  if (channels.elements(0) != enumeration.elements)
    throw std::invalid_argument("static_region: enumeration elements do not match the RIS");

  RateRegion region;
  region.users = channels.users();
  region.scheme = scheme;
  region.mode = ConfigMode::Static;
  region.profiles = enumeration.size();

  std::vector<Point2> all;
  for (std::uint64_t i = 0; i < region.profiles; ++i) {
    const RisProfile profile = enumeration.profile(i);
    const EffectiveGains gains{effective_gains(channels, profile)};
    if (region.users == 2) {
      auto front = pareto_frontier(sweep_two_users(gains, scheme, total_power, sampling));
      region.pieces.push_back(downward_hull(front));
      all.insert(all.end(), front.begin(), front.end());
    } else {
      auto samples = sweep_scheme(gains, scheme, total_power, sampling);
      region.points.insert(region.points.end(), std::make_move_iterator(samples.begin()),
                           std::make_move_iterator(samples.end()));
    }
  }
  if (region.users == 2) {
    region.points = to_tuples(all);
    region.boundary = to_tuples(pareto_frontier(std::move(all)));
  } else {
    region.boundary = nondominated(region.points);
  }
  return region;
}

RateRegion dynamic_region(std::span<const RateRegion> static_regions) {
  if (static_regions.empty()) throw std::invalid_argument("dynamic_region: no input regions");
  const auto& first = static_regions.front();
  if (first.users != 2) throw std::invalid_argument("dynamic_region: two users only");
  RateRegion out;
  out.users = 2;
  out.scheme = first.scheme;
  out.mode = ConfigMode::Dynamic;
  std::vector<Point2> all;
  for (const auto& r : static_regions) {
    if (r.users != first.users || r.scheme != first.scheme)
      throw std::invalid_argument("dynamic_region: inputs must share scheme and user count");
    out.profiles += r.profiles;
    for (const auto& p : r.points) all.push_back({p[0], p[1]});
    out.points.insert(out.points.end(), r.points.begin(), r.points.end());
  }
  if (all.empty()) throw std::invalid_argument("dynamic_region: inputs contain no points");

  const auto front = pareto_frontier(all);
  auto chain = downward_hull(front);
  // Drop the axis anchors the hull added; keep only genuine vertices.
  std::vector<Point2> vertices;
  for (const auto& v : chain) {
    const bool left_anchor = v[0] == 0.0 && front.front()[0] > 0.0;
    const bool right_anchor = v[1] == 0.0 && front.back()[1] > 0.0;
    if (!left_anchor && !right_anchor) vertices.push_back(v);
  }
  out.boundary = to_tuples(pareto_frontier(vertices));
  out.pieces.push_back(std::move(chain));
  return out;
}

bool contains(const RateRegion& region, std::span<const double> point, double tolerance) {
  if (point.size() != region.users) throw std::invalid_argument("contains: dimension mismatch");
  RateTuple q(point.begin(), point.end());
  bool at_origin = true;
  for (auto& v : q) {
    v -= tolerance;
    at_origin = at_origin && v <= 0.0;
  }
  if (at_origin && (!region.boundary.empty() || !region.points.empty())) return true;
  for (const auto& b : region.boundary) {
    bool dominated = true;
    for (std::size_t k = 0; k < q.size() && dominated; ++k) dominated = q[k] <= b[k];
    if (dominated) return true;
  }
  if (region.users == 2) {
    for (const auto& piece : region.pieces)
      if (under_chain(piece, {q[0], q[1]})) return true;
  }
  return false;
}

double region_area(const RateRegion& region) {
  if (region.users != 2) throw std::invalid_argument("region_area: two users only");
  if (region.boundary.empty()) throw std::invalid_argument("region_area: empty boundary");
  const auto pts = to_points(region.boundary);
  double area = pts.front()[0] * pts.front()[1];
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i][0] - pts[i - 1][0]) * (pts[i][1] + pts[i - 1][1]) * 0.5;
  return area;
}

}  // namespace risnoma
