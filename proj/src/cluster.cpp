#include "risnoma/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace risnoma {

namespace {

struct Pair {
  std::size_t user = 0;
  std::size_t beam = 0;
};

CVector reflected(const ChannelSet& ch, std::size_t r, std::size_t k, const RisProfile& p) {
  return ch.bs_ris[r].transpose() * ch.ris_user[r][k].conjugate().cwiseProduct(p.coefficients);
}

// h_k^T w_j for each pair as affine terms in RIS r; the other RISs hold `fixed`.
LinkTerms pair_links(const ChannelSet& ch, std::size_t r, const std::vector<RisProfile>& fixed,
                     const BeamformerSet& bf, const std::vector<Pair>& pairs) {
  const auto m = static_cast<Eigen::Index>(ch.elements(r));
  LinkTerms lt;
  lt.constant.resize(static_cast<Eigen::Index>(pairs.size()));
  lt.slope.resize(static_cast<Eigen::Index>(pairs.size()), m);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [k, j] = pairs[i];
    const CVector& w = bf.vectors[j];
    CVector h = ch.direct[k];
    for (std::size_t q = 0; q < ch.ris_count(); ++q)
      if (q != r) h += reflected(ch, q, k, fixed[q]);
    const auto row = static_cast<Eigen::Index>(i);
    lt.constant(row) = (h.transpose() * w).value();
    const CVector fw = ch.bs_ris[r] * w;
    for (Eigen::Index e = 0; e < m; ++e) lt.slope(row, e) = std::conj(ch.ris_user[r][k](e)) * fw(e);
  }
  return lt;
}

void check_beams(const ChannelSet& ch, const ClusterAssignment& a, const BeamformerSet& bf) {
  ch.validate();
  if (bf.vectors.size() != a.clusters.size())
    throw std::invalid_argument("cluster design: one beamformer per cluster required");
  for (const auto& v : bf.vectors)
    if (static_cast<std::size_t>(v.size()) != ch.antennas())
      throw std::invalid_argument("cluster design: beamformer length must equal the antenna count");
}

RisProfile start_profile(std::size_t m, std::optional<int> bits, const std::optional<RisProfile>& start) {
  if (!start) return RisProfile::unit(m, bits);
  if (start->size() != m) throw std::invalid_argument("cluster design: start profile size mismatch");
  return *start;
}

}  // namespace

void ClusterAssignment::validate(std::size_t users, std::size_t ris_count) const {
  if (clusters.empty()) throw std::invalid_argument("assignment: no clusters");
  std::vector<int> seen(users, 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (clusters[c].empty()) throw std::invalid_argument("assignment: cluster " + std::to_string(c) + " is empty");
    for (std::size_t k : clusters[c]) {
      if (k >= users) throw std::invalid_argument("assignment: user " + std::to_string(k) + " out of range");
      if (seen[k]++) throw std::invalid_argument("assignment: user " + std::to_string(k) + " in two clusters");
    }
  }
  for (std::size_t k = 0; k < users; ++k)
    if (!seen[k]) throw std::invalid_argument("assignment: user " + std::to_string(k) + " is not assigned");
  if (!serving_ris.empty()) {
    if (serving_ris.size() != clusters.size())
      throw std::invalid_argument("assignment: serving_ris needs one entry per cluster");
    for (std::size_t r : serving_ris)
      if (r >= ris_count) throw std::invalid_argument("assignment: serving RIS " + std::to_string(r) + " out of range");
  }
}

std::size_t ClusterAssignment::cluster_of(std::size_t user) const {
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (std::find(clusters[c].begin(), clusters[c].end(), user) != clusters[c].end()) return c;
  throw std::out_of_range("assignment: user " + std::to_string(user) + " is not assigned");
}

CentralizedResult centralized_cluster_design(const ChannelSet& channels, const ClusterAssignment& assignment,
                                             const BeamformerSet& beamformers, const CentralizedOptions& options) {
  if (channels.ris_count() != 1) throw std::invalid_argument("centralized_cluster_design: exactly one RIS");
  const std::size_t users = channels.users(), nc = assignment.clusters.size();
  assignment.validate(users, 1);
  check_beams(channels, assignment, beamformers);
  if (!options.gain_floors.empty() && options.gain_floors.size() != nc)
    throw std::invalid_argument("centralized_cluster_design: one gain floor per cluster required");
  if (!(options.penalty >= 0.0)) throw std::invalid_argument("centralized_cluster_design: penalty must be >= 0");

  std::vector<Pair> pairs;
  std::vector<std::size_t> owner(users);
  for (std::size_t k = 0; k < users; ++k) {
    owner[k] = assignment.cluster_of(k);
    for (std::size_t j = 0; j < nc; ++j) pairs.push_back({k, j});
  }
  const LinkTerms links = pair_links(channels, 0, {RisProfile{}}, beamformers, pairs);
  const auto floors = options.gain_floors;

  // Row k * nc + j holds h_k^T w_j.
  auto evaluate = [=](std::span<const cd> s, double& leakage, std::vector<double>& gains) {
    leakage = 0.0;
    gains.assign(nc, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < users; ++k)
      for (std::size_t j = 0; j < nc; ++j) {
        const double p = std::norm(s[k * nc + j]);
        if (j == owner[k])
          gains[j] = std::min(gains[j], p);
        else
          leakage += p;
      }
  };
  auto shortfall = [=](const std::vector<double>& gains) {
    double total = 0.0;
    for (std::size_t c = 0; c < floors.size(); ++c) total += std::max(0.0, floors[c] - gains[c]);
    return total;
  };

  LinkObjective obj;
  const double penalty = options.penalty;
  obj.value = [=](std::span<const cd> s) {
    double leakage;
    std::vector<double> gains;
    evaluate(s, leakage, gains);
    if (nc == 1) return gains[0] - penalty * shortfall(gains);
    return -(leakage + penalty * shortfall(gains));
  };
  if (nc == 1 && users == 1) obj.single_link = 0;

  CentralizedResult res;
  res.profile = coordinate_ascent(links, obj, {start_profile(channels.elements(0), options.bits, options.start)},
                                  options.coordinate)
                    .front();
  CVector s = links.constant + links.slope * res.profile.coefficients;
  evaluate({s.data(), static_cast<std::size_t>(s.size())}, res.leakage, res.cluster_gains);
  for (std::size_t k = 0; k < users; ++k) res.signal += std::norm(s(static_cast<Eigen::Index>(k * nc + owner[k])));
  res.floors_met = shortfall(res.cluster_gains) == 0.0;
  if (!res.floors_met) {
    std::ostringstream os;
    os << "gain floors not met:";
    for (std::size_t c = 0; c < floors.size(); ++c)
      if (res.cluster_gains[c] < floors[c]) os << " cluster " << c << " gain " << res.cluster_gains[c] << " < " << floors[c] << ";";
    res.warning = os.str();
  }
  return res;
}

DistributedResult distributed_cluster_design(const ChannelSet& channels, const ClusterAssignment& assignment,
                                             const BeamformerSet& beamformers, const DistributedOptions& options) {
  const std::size_t users = channels.users(), nc = assignment.clusters.size(), nr = channels.ris_count();
  if (nr == 0) throw std::invalid_argument("distributed_cluster_design: at least one RIS required");
  assignment.validate(users, nr);
  if (assignment.serving_ris.empty())
    throw std::invalid_argument("distributed_cluster_design: every cluster needs a serving RIS");
  check_beams(channels, assignment, beamformers);

  std::vector<RisProfile> reference = options.reference;
  if (reference.empty())
    for (std::size_t r = 0; r < nr; ++r) reference.push_back(RisProfile::unit(channels.elements(r), options.bits));
  if (reference.size() != nr) throw std::invalid_argument("distributed_cluster_design: one reference profile per RIS");
  for (std::size_t r = 0; r < nr; ++r)
    if (reference[r].size() != channels.elements(r))
      throw std::invalid_argument("distributed_cluster_design: reference profile size mismatch");

  DistributedResult res;
  res.profiles = reference;
  for (std::size_t r = 0; r < nr; ++r) {
    std::vector<Pair> pairs;
    for (std::size_t c = 0; c < nc; ++c)
      if (assignment.serving_ris[c] == r)
        for (std::size_t k : assignment.clusters[c]) pairs.push_back({k, c});
    if (pairs.empty()) continue;
    const LinkTerms links = pair_links(channels, r, reference, beamformers, pairs);
    LinkObjective obj;
    obj.value = [](std::span<const cd> s) {
      double g = std::numeric_limits<double>::infinity();
      for (const cd& v : s) g = std::min(g, std::norm(v));
      return g;
    };
    if (pairs.size() == 1) obj.single_link = 0;
    res.profiles[r] = coordinate_ascent(links, obj, {reference[r]}, options.coordinate).front();
  }

  res.cluster_gains.assign(nc, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k : assignment.clusters[c]) {
      const CVector h = equivalent_channel(channels, k, res.profiles);
      res.cluster_gains[c] = std::min(res.cluster_gains[c], std::norm((h.transpose() * beamformers.vectors[c]).value()));
    }

  res.cross_leakage = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  res.serving_power.assign(nr, 0.0);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t k : assignment.clusters[c]) {
        const CVector g = reflected(channels, r, k, res.profiles[r]);
        if (assignment.serving_ris[c] == r) {
          res.serving_power[r] += std::norm((g.transpose() * beamformers.vectors[c]).value());
        } else {
          for (const auto& w : beamformers.vectors)
            res.cross_leakage(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
                std::norm((g.transpose() * w).value());
        }
      }
  return res;
}

}  // namespace risnoma
