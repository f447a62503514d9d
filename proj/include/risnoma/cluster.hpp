#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "risnoma/beamforming.hpp"

namespace risnoma {

struct ClusterAssignment {
  std::vector<std::vector<std::size_t>> clusters;
  /// Serving RIS per cluster (distributed design); empty for one central RIS.
  std::vector<std::size_t> serving_ris;

  /// Clusters nonempty, disjoint and covering users 0..users-1; serving RIS
  /// indices below ris_count when given.
  void validate(std::size_t users, std::size_t ris_count) const;
  std::size_t cluster_of(std::size_t user) const;
};

struct CentralizedOptions {
  /// Per-cluster floor on |h_k^T w_c|^2 for every user k of cluster c.
  std::vector<double> gain_floors;
  /// Weight of the total floor shortfall relative to the leakage.
  double penalty = 1e3;
  std::optional<int> bits;
  std::optional<RisProfile> start;  // default: unit profile
  CoordinateOptions coordinate{1000, 1e-10, 64};
};

struct CentralizedResult {
  RisProfile profile;
  double leakage = 0.0;               // sum_k sum_{j not c(k)} |h_k^T w_j|^2
  double signal = 0.0;                // sum_k |h_k^T w_c(k)|^2
  std::vector<double> cluster_gains;  // min_{k in c} |h_k^T w_c|^2
  bool floors_met = true;
  std::string warning;
};

/// One central RIS. Minimizes the inter-cluster leakage plus the penalized
/// floor shortfall by coordinate ascent; with a single cluster there is no
/// leakage and the cluster's minimum gain is maximized instead.
CentralizedResult centralized_cluster_design(const ChannelSet& channels, const ClusterAssignment& assignment,
                                             const BeamformerSet& beamformers,
                                             const CentralizedOptions& options = {});

struct DistributedOptions {
  std::optional<int> bits;
  /// Profiles the other RISs hold while one RIS is optimized; default unit.
  std::vector<RisProfile> reference;
  CoordinateOptions coordinate;
};

struct DistributedResult {
  std::vector<RisProfile> profiles;
  std::vector<double> cluster_gains;  // with every RIS configured
  /// (r, c): power RIS r reflects from all beams onto the users of cluster c
  /// when r does not serve c; zero otherwise.
  Eigen::MatrixXd cross_leakage;
  std::vector<double> serving_power;  // per RIS, own-beam power reflected onto served users
};

/// Every RIS maximizes the minimum equivalent gain of the clusters it serves,
/// with the other RISs held at their reference profiles, so the result does
/// not depend on the processing order.
DistributedResult distributed_cluster_design(const ChannelSet& channels, const ClusterAssignment& assignment,
                                             const BeamformerSet& beamformers,
                                             const DistributedOptions& options = {});

}  // namespace risnoma
