#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "risnoma/cluster.hpp"
#include "risnoma/channel.hpp"
#include "risnoma/deployment.hpp"
#include "risnoma/region.hpp"
#include "risnoma/region_io.hpp"

namespace risnoma {

/// Schema violation; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Region, Deploy, Beamform, Cluster };
std::string to_string(ExperimentKind k);

enum class ChannelSource { Geometry, Iid };

struct ChannelBlock {
  ChannelSource source = ChannelSource::Geometry;
  ChannelModelConfig model;
  /// Iid source: every link entry CN(0,1), noise 1, total power `power`.
  std::size_t users = 2;
  double power = 1.0;
};

struct RegionBlock {
  std::size_t realizations = 1;
  std::size_t elements = 4;
  std::optional<int> bits = 1;      // empty with `samples` set: continuous sampling
  std::uint64_t samples = 0;
  std::vector<Scheme> schemes{Scheme::NOMA, Scheme::TDMA, Scheme::FDMA};
  RegionSampling sampling;
};

struct DeployBlock {
  DeployScheme scheme = DeployScheme::SNoma;
  std::vector<double> weights;
  double x_min = 30.0;
  double x_max = 45.0;
  double step = 0.25;
  std::size_t draws = 100;
  std::size_t elements = 8;
  int bits = 1;
  bool block_direct = true;
  std::optional<std::vector<double>> min_rates;
};

struct BeamformBlock {
  std::size_t realizations = 1;
  std::size_t antennas = 2;
  std::size_t elements = 2;
  bool block_direct = false;
  AlternatingConfig design;
};

enum class ClusterDesign { Centralized, Distributed };

struct ClusterBlock {
  ClusterDesign design = ClusterDesign::Centralized;
  std::size_t realizations = 1;
  std::size_t antennas = 2;
  std::vector<std::size_t> elements{8};  // per RIS
  std::optional<int> bits;
  bool block_direct = true;
  ClusterAssignment assignment;
  std::vector<double> gain_floors;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Region;
  std::uint64_t seed = 0;
  std::string output_dir;
  ChannelBlock channel;
  NetworkGeometry geometry;  // Geometry source only
  std::optional<RegionBlock> region;
  std::optional<DeployBlock> deploy;
  std::optional<BeamformBlock> beamform;
  std::optional<ClusterBlock> cluster;

  /// Canonical YAML of the parsed file, with the effective seed.
  std::string canonical;
  std::string source_text;

  std::string config_hash() const;
  double total_power() const;
  void validate() const;
};

/// Parses YAML text; throws ConfigError naming the field on any violation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Sets the seed and refreshes the canonical form.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

/// Realization `draw` of the experiment's channels (single-antenna BS and
/// one RIS for region experiments).
ChannelSet make_channels(const ExperimentConfig& config, std::size_t antennas,
                         const std::vector<std::size_t>& elements, const std::vector<bool>& blocked,
                         std::uint64_t draw);

DeploymentProblem deployment_problem(const ExperimentConfig& config);

struct Artifact {
  std::string path;  // relative to the output directory
  std::string checksum;
};

struct RunResult {
  std::string output_dir;
  std::vector<Artifact> artifacts;  // numeric artifacts, manifest excluded
  std::string manifest;
  std::vector<std::string> warnings;
};

/// Runs the experiment and writes its CSV/JSON artifacts plus manifest.json
/// into config.output_dir. Numeric artifacts depend only on the config.
RunResult run_experiment(const ExperimentConfig& config);

enum class CompareMetric { Containment, AreaRatio };
CompareMetric parse_compare_metric(const std::string& s);

struct CompareOptions {
  double tolerance = 1e-6;
  bool allow_mismatch = false;  // accept differing channel_hash metadata
};

struct CompareReport {
  std::vector<std::string> files;
  std::vector<double> areas;
  /// contains[i][j]: region i contains every boundary point of region j.
  std::vector<std::vector<bool>> contains;
  /// area(i) / area(0) for every file.
  std::vector<double> ratio_to_first;
  std::string text;
};

/// Throws std::invalid_argument when the files disagree on the user count,
/// lack scheme metadata, or (unless allowed) carry different channel hashes.
CompareReport compare_regions(const std::vector<std::string>& files, CompareMetric metric,
                              const CompareOptions& options = {});

/// True when every boundary point of `inner` (and, for a dynamic region,
/// points along its hull edges) lies in `outer`.
bool region_contains(const RateRegion& outer, const RateRegion& inner, double tolerance);

}  // namespace risnoma
