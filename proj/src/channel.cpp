#include "risnoma/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace risnoma {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

void check_point(const Point3& p, const std::string& what) {
  if (!finite(p)) throw std::invalid_argument(what + ": non-finite coordinate");
  if (p.z < 0.0) throw std::invalid_argument(what + ": negative height");
}

double wrap_phase(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  return phi;
}

// Cosine of the angle between the link src->dst and a coordinate axis.
double axis_cosine(const Point3& src, const Point3& dst, int axis) {
  const double d = distance(src, dst);
  if (d <= 0.0) return 0.0;
  const double comp = axis == 0 ? dst.x - src.x : axis == 1 ? dst.y - src.y : dst.z - src.z;
  return comp / d;
}

// Link ids for stream splitting.
constexpr std::uint64_t kDirectLink = 1;
constexpr std::uint64_t kRisUserLink = 100;
constexpr std::uint64_t kBsRisLink = 10000;

}  // namespace

double distance(const Point3& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

void NetworkGeometry::validate() const {
  check_point(bs, "bs_position");
  for (std::size_t r = 0; r < ris.size(); ++r) check_point(ris[r], "ris_positions[" + std::to_string(r) + "]");
  if (users.empty()) throw std::invalid_argument("user_positions: at least one user required");
  for (std::size_t k = 0; k < users.size(); ++k)
    check_point(users[k], "user_positions[" + std::to_string(k) + "]");
}

void FadingSpec::validate() const {
  if (!(rician_k >= 0.0)) throw std::invalid_argument("rician_k must be >= 0");
  if (!(path_loss_exponent >= 0.0)) throw std::invalid_argument("path_loss_exponent must be >= 0");
  if (!std::isfinite(reference_loss_db)) throw std::invalid_argument("reference_loss_db must be finite");
}

FadingSpec default_direct_fading() { return {FadingModel::Rayleigh, 0.0, 3.5, 30.0}; }
FadingSpec default_reflected_fading() { return {FadingModel::Rician, 3.0, 2.2, 30.0}; }

RisProfile RisProfile::unit(std::size_t elements, std::optional<int> bits) {
  RisProfile p;
  p.coefficients = CVector::Ones(static_cast<Eigen::Index>(elements));
  p.resolution_bits = bits;
  return p;
}

RisProfile RisProfile::from_phases(std::span<const double> phases, std::optional<int> bits) {
  RisProfile p;
  p.coefficients.resize(static_cast<Eigen::Index>(phases.size()));
  for (std::size_t m = 0; m < phases.size(); ++m) p.coefficients(static_cast<Eigen::Index>(m)) = std::polar(1.0, phases[m]);
  p.resolution_bits = bits;
  return p;
}

RisProfile RisProfile::from_levels(std::span<const int> levels, int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("resolution bits must be in [1, 16]");
  const double step = kTwoPi / static_cast<double>(1 << bits);
  RisProfile p;
  p.coefficients.resize(static_cast<Eigen::Index>(levels.size()));
  for (std::size_t m = 0; m < levels.size(); ++m)
    p.coefficients(static_cast<Eigen::Index>(m)) = std::polar(1.0, step * levels[m]);
  p.resolution_bits = bits;
  return p;
}

std::vector<double> RisProfile::phases() const {
  std::vector<double> out(size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = wrap_phase(std::arg(coefficients(static_cast<Eigen::Index>(m))));
  return out;
}

std::vector<double> RisProfile::amplitudes() const {
  std::vector<double> out(size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = std::abs(coefficients(static_cast<Eigen::Index>(m)));
  return out;
}

void RisProfile::validate(double tol) const {
  for (Eigen::Index m = 0; m < coefficients.size(); ++m) {
    if (std::abs(coefficients(m)) > 1.0 + tol)
      throw std::invalid_argument("RIS coefficient " + std::to_string(m) + " has modulus > 1");
  }
  if (!resolution_bits) return;
  const int bits = *resolution_bits;
  if (bits < 1) throw std::invalid_argument("resolution bits must be positive");
  const double step = kTwoPi / static_cast<double>(1 << bits);
  for (double phi : phases()) {
    const double k = std::round(phi / step);
    if (std::abs(phi - k * step) > tol)
      throw std::invalid_argument("phase " + std::to_string(phi) + " not on the " +
                                  std::to_string(bits) + "-bit grid");
  }
}

RisProfile quantize(const RisProfile& profile, int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("resolution bits must be in [1, 16]");
  const int levels = 1 << bits;
  const double step = kTwoPi / levels;
  RisProfile out;
  out.coefficients.resize(profile.coefficients.size());
  out.resolution_bits = bits;
  for (Eigen::Index m = 0; m < profile.coefficients.size(); ++m) {
    const cd c = profile.coefficients(m);
    const long k = std::lround(wrap_phase(std::arg(c)) / step) % levels;
    out.coefficients(m) = std::polar(std::abs(c), step * static_cast<double>(k));
  }
  return out;
}

std::size_t ChannelSet::antennas() const {
  if (!direct.empty()) return static_cast<std::size_t>(direct.front().size());
  if (!bs_ris.empty()) return static_cast<std::size_t>(bs_ris.front().cols());
  return 0;
}

std::size_t ChannelSet::elements(std::size_t ris) const {
  if (ris >= bs_ris.size()) return 0;
  return static_cast<std::size_t>(bs_ris[ris].rows());
}

void ChannelSet::validate() const {
  const auto k_users = users();
  if (k_users == 0) throw std::invalid_argument("channel set has no users");
  const auto nt = antennas();
  if (nt == 0) throw std::invalid_argument("channel set has zero antennas");
  if (blocked_direct.size() != k_users) throw std::invalid_argument("blocked_direct size != users");
  for (std::size_t k = 0; k < k_users; ++k) {
    if (static_cast<std::size_t>(direct[k].size()) != nt)
      throw std::invalid_argument("direct channel dimension mismatch for user " + std::to_string(k));
    if (blocked_direct[k] && direct[k].squaredNorm() != 0.0)
      throw std::invalid_argument("blocked user " + std::to_string(k) + " has a nonzero direct link");
  }
  if (ris_user.size() != bs_ris.size()) throw std::invalid_argument("ris_user / bs_ris RIS count mismatch");
  for (std::size_t r = 0; r < bs_ris.size(); ++r) {
    if (static_cast<std::size_t>(bs_ris[r].cols()) != nt)
      throw std::invalid_argument("bs_ris column count != antennas");
    if (ris_user[r].size() != k_users) throw std::invalid_argument("ris_user user count mismatch");
    for (const auto& g : ris_user[r])
      if (g.size() != bs_ris[r].rows()) throw std::invalid_argument("ris_user length != RIS elements");
  }
}

double path_loss(double distance_m, const FadingSpec& spec) {
  if (!(distance_m > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  return std::pow(10.0, -spec.reference_loss_db / 10.0) * std::pow(distance_m, -spec.path_loss_exponent);
}

CVector sample_channel(std::size_t dimension, const FadingSpec& spec, const CVector& los, Rng& rng) {
  if (dimension == 0) throw std::invalid_argument("sample_channel: dimension must be >= 1");
  const auto n = static_cast<Eigen::Index>(dimension);
  CVector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.complex_normal();
  if (spec.model == FadingModel::Rayleigh) return out;

  if (los.size() != n) throw std::invalid_argument("sample_channel: LoS vector dimension mismatch");
  const double k = spec.rician_k;
  const double los_w = std::sqrt(k / (k + 1.0));
  const double nlos_w = std::sqrt(1.0 / (k + 1.0));
  return los_w * los + nlos_w * out;
}

CVector equivalent_channel(const CVector& direct, const CVector& ris_user, const CMatrix& bs_ris,
                           const RisProfile& profile) {
  const auto m = profile.coefficients.size();
  if (ris_user.size() != m || bs_ris.rows() != m)
    throw std::invalid_argument("equivalent_channel: RIS element count mismatch");
  if (bs_ris.cols() != direct.size())
    throw std::invalid_argument("equivalent_channel: antenna count mismatch");
  if (m == 0) return direct;
  const CVector weighted = ris_user.conjugate().cwiseProduct(profile.coefficients);
  return direct + bs_ris.transpose() * weighted;
}

CVector equivalent_channel(const ChannelSet& channels, std::size_t user,
                           std::span<const RisProfile> profiles) {
  if (profiles.size() != channels.ris_count())
    throw std::invalid_argument("equivalent_channel: need one profile per RIS");
  CVector h = channels.direct.at(user);
  const CVector zero = CVector::Zero(h.size());
  for (std::size_t r = 0; r < profiles.size(); ++r)
    h += equivalent_channel(zero, channels.ris_user[r][user], channels.bs_ris[r], profiles[r]);
  return h;
}

RisProfile align_phases(cd direct, const CVector& ris_user, const CVector& bs_ris) {
  if (ris_user.size() != bs_ris.size())
    throw std::invalid_argument("align_phases: element count mismatch");
  const double ref = direct == cd{} ? 0.0 : std::arg(direct);
  std::vector<double> phases(static_cast<std::size_t>(ris_user.size()));
  for (Eigen::Index m = 0; m < ris_user.size(); ++m)
    phases[static_cast<std::size_t>(m)] =
        wrap_phase(ref - std::arg(std::conj(ris_user(m))) - std::arg(bs_ris(m)));
  return RisProfile::from_phases(phases);
}

double coherent_bound(cd direct, const CVector& ris_user, const CVector& bs_ris) {
  return std::abs(direct) + ris_user.cwiseAbs().dot(bs_ris.cwiseAbs());
}

CVector ula_response(std::size_t elements, double cos_angle) {
  CVector a(static_cast<Eigen::Index>(elements));
  for (Eigen::Index n = 0; n < a.size(); ++n)
    a(n) = std::polar(1.0, std::numbers::pi * static_cast<double>(n) * cos_angle);
  return a;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double ChannelModelConfig::noise_watts() const { return dbm_to_watts(noise_dbm); }
double ChannelModelConfig::tx_power_watts() const { return dbm_to_watts(tx_power_dbm); }

ChannelSet generate_channels(const NetworkGeometry& geometry, const ChannelModelConfig& model,
                             const ChannelLayout& layout, std::uint64_t seed, std::uint64_t draw) {
  geometry.validate();
  model.direct.validate();
  model.reflected.validate();
  if (layout.antennas == 0) throw std::invalid_argument("layout: antennas must be >= 1");
  if (layout.elements.size() != geometry.ris.size())
    throw std::invalid_argument("layout: one element count per RIS required");
  const std::size_t k_users = geometry.users.size();
  if (!layout.blocked_direct.empty() && layout.blocked_direct.size() != k_users)
    throw std::invalid_argument("layout: blocked_direct must have one entry per user");

  const double inv_noise = 1.0 / model.noise_watts();
  const auto nt = static_cast<Eigen::Index>(layout.antennas);

  ChannelSet ch;
  ch.blocked_direct.assign(k_users, false);
  if (!layout.blocked_direct.empty()) ch.blocked_direct = layout.blocked_direct;

  // BS array along y, RIS arrays along x.
  for (std::size_t k = 0; k < k_users; ++k) {
    if (ch.blocked_direct[k]) {
      ch.direct.push_back(CVector::Zero(nt));
      continue;
    }
    const Point3& u = geometry.users[k];
    auto rng = Rng::stream(seed, {draw, k, kDirectLink});
    const CVector los = ula_response(layout.antennas, axis_cosine(geometry.bs, u, 1));
    const double scale = std::sqrt(path_loss(distance(geometry.bs, u), model.direct) * inv_noise);
    ch.direct.push_back(scale * sample_channel(layout.antennas, model.direct, los, rng));
  }

  for (std::size_t r = 0; r < geometry.ris.size(); ++r) {
    const Point3& s = geometry.ris[r];
    const std::size_t m = layout.elements[r];
    const auto mi = static_cast<Eigen::Index>(m);
    CMatrix f(mi, nt);
    if (m > 0) {
      auto rng = Rng::stream(seed, {draw, 0, kBsRisLink + r});
      const CVector a_ris = ula_response(m, axis_cosine(s, geometry.bs, 0));
      const CVector a_bs = ula_response(layout.antennas, axis_cosine(geometry.bs, s, 1));
      const CMatrix los_m = a_ris * a_bs.transpose();
      const CVector los = Eigen::Map<const CVector>(los_m.data(), mi * nt);
      const CVector flat = sample_channel(m * layout.antennas, model.reflected, los, rng);
      const double scale = std::sqrt(path_loss(distance(geometry.bs, s), model.reflected));
      f = scale * Eigen::Map<const CMatrix>(flat.data(), mi, nt);
    }
    ch.bs_ris.push_back(f);

    std::vector<CVector> gs;
    for (std::size_t k = 0; k < k_users; ++k) {
      if (m == 0) {
        gs.emplace_back(0);
        continue;
      }
      const Point3& u = geometry.users[k];
      auto rng = Rng::stream(seed, {draw, k, kRisUserLink + r});
      const CVector los = ula_response(m, axis_cosine(s, u, 0));
      // The cascaded link carries both path losses; the noise normalization
      // is applied once, on the RIS-user leg.
      const double scale = std::sqrt(path_loss(distance(s, u), model.reflected) * inv_noise);
      gs.push_back(scale * sample_channel(m, model.reflected, los, rng));
    }
    ch.ris_user.push_back(std::move(gs));
  }
  return ch;
}

std::vector<double> effective_gains(const ChannelSet& channels, const RisProfile& profile) {
  if (channels.antennas() != 1) throw std::invalid_argument("effective_gains: single-antenna BS only");
  std::vector<double> gains(channels.users());
  if (channels.ris_count() == 0) {
    for (std::size_t k = 0; k < gains.size(); ++k) gains[k] = std::norm(channels.direct[k](0));
    return gains;
  }
  if (channels.ris_count() != 1) throw std::invalid_argument("effective_gains: at most one RIS");
  for (std::size_t k = 0; k < gains.size(); ++k)
    gains[k] = equivalent_channel(channels.direct[k], channels.ris_user[0][k], channels.bs_ris[0], profile)
                   .squaredNorm();
  return gains;
}

}  // namespace risnoma
