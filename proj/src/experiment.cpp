#include "risnoma/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "risnoma/channel_io.hpp"
#include "risnoma/rng.hpp"

namespace risnoma {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Schema helpers

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError((path.empty() ? "config" : path) + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(join(path, key) + ": unknown field");
  }
}

YAML::Node required(const YAML::Node& node, const std::string& path, const std::string& key) {
  const YAML::Node n = node[key];
  if (!n) throw ConfigError(join(path, key) + ": required field missing");
  return n;
}

double number(const YAML::Node& n, const std::string& path) {
  try {
    const double v = n.as<double>();
    if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
    return v;
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected a number");
  }
}

std::uint64_t count(const YAML::Node& n, const std::string& path) {
  std::string s;
  try {
    s = n.as<std::string>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected a non-negative integer");
  }
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw ConfigError(path + ": expected a non-negative integer, got '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError(path + ": integer out of range");
  }
}

bool boolean(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected true or false");
  }
}

std::string text(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected a string");
  return n.as<std::string>();
}

std::vector<double> numbers(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence()) throw ConfigError(path + ": expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::size_t> counts(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence()) throw ConfigError(path + ": expected a list of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(count(n[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Point3 point(const YAML::Node& n, const std::string& path) {
  const auto v = numbers(n, path);
  if (v.size() != 3) throw ConfigError(path + ": expected [x, y, z]");
  return {v[0], v[1], v[2]};
}

int bits_of(const YAML::Node& n, const std::string& path) {
  const auto b = count(n, path);
  if (b < 1 || b > 16) throw ConfigError(path + ": must be between 1 and 16");
  return static_cast<int>(b);
}

template <class T>
void optional_field(const YAML::Node& node, const std::string& path, const std::string& key, T& out,
                    T (*read)(const YAML::Node&, const std::string&)) {
  if (const YAML::Node n = node[key]) out = read(n, join(path, key));
}

std::size_t size_of(const YAML::Node& n, const std::string& path) { return static_cast<std::size_t>(count(n, path)); }

FadingSpec fading(const YAML::Node& n, const std::string& path, FadingSpec spec) {
  check_keys(n, path, {"model", "rician_k", "path_loss_exponent", "reference_loss_db"});
  if (const YAML::Node m = n["model"]) {
    const auto s = text(m, join(path, "model"));
    if (s == "rayleigh" || s == "Rayleigh")
      spec.model = FadingModel::Rayleigh;
    else if (s == "rician" || s == "Rician")
      spec.model = FadingModel::Rician;
    else
      throw ConfigError(join(path, "model") + ": expected rayleigh or rician, got '" + s + "'");
  }
  optional_field(n, path, "rician_k", spec.rician_k, number);
  optional_field(n, path, "path_loss_exponent", spec.path_loss_exponent, number);
  optional_field(n, path, "reference_loss_db", spec.reference_loss_db, number);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return spec;
}

ChannelBlock channel_block(const YAML::Node& n) {
  ChannelBlock c;
  if (!n) return c;
  const std::string path = "channel";
  check_keys(n, path, {"source", "direct", "reflected", "noise_dbm", "tx_power_dbm", "users", "power"});
  if (const YAML::Node s = n["source"]) {
    const auto v = text(s, "channel.source");
    if (v == "geometry")
      c.source = ChannelSource::Geometry;
    else if (v == "iid")
      c.source = ChannelSource::Iid;
    else
      throw ConfigError("channel.source: expected geometry or iid, got '" + v + "'");
  }
  if (const YAML::Node d = n["direct"]) c.model.direct = fading(d, "channel.direct", c.model.direct);
  if (const YAML::Node r = n["reflected"]) c.model.reflected = fading(r, "channel.reflected", c.model.reflected);
  optional_field(n, path, "noise_dbm", c.model.noise_dbm, number);
  optional_field(n, path, "tx_power_dbm", c.model.tx_power_dbm, number);
  optional_field(n, path, "users", c.users, size_of);
  optional_field(n, path, "power", c.power, number);
  if (c.users < 1) throw ConfigError("channel.users: must be >= 1");
  if (!(c.power > 0.0)) throw ConfigError("channel.power: must be > 0");
  return c;
}

NetworkGeometry geometry_block(const YAML::Node& n) {
  check_keys(n, "geometry", {"bs", "ris", "users"});
  NetworkGeometry g;
  g.bs = point(required(n, "geometry", "bs"), "geometry.bs");
  const YAML::Node ris = required(n, "geometry", "ris");
  if (!ris.IsSequence()) throw ConfigError("geometry.ris: expected a list of [x, y, z]");
  for (std::size_t i = 0; i < ris.size(); ++i) g.ris.push_back(point(ris[i], "geometry.ris[" + std::to_string(i) + "]"));
  const YAML::Node users = required(n, "geometry", "users");
  if (!users.IsSequence()) throw ConfigError("geometry.users: expected a list of [x, y, z]");
  for (std::size_t i = 0; i < users.size(); ++i)
    g.users.push_back(point(users[i], "geometry.users[" + std::to_string(i) + "]"));
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
  return g;
}

RegionBlock region_block(const YAML::Node& n) {
  const std::string path = "region";
  check_keys(n, path, {"realizations", "elements", "bits", "samples", "schemes", "boundary_samples", "fdma_grid"});
  RegionBlock b;
  optional_field(n, path, "realizations", b.realizations, size_of);
  optional_field(n, path, "elements", b.elements, size_of);
  if (n["samples"]) {
    b.samples = count(n["samples"], "region.samples");
    b.bits.reset();
    if (n["bits"]) throw ConfigError("region.samples: give either bits or samples, not both");
    if (b.samples < 1) throw ConfigError("region.samples: must be >= 1");
  } else if (n["bits"]) {
    b.bits = bits_of(n["bits"], "region.bits");
  }
  if (const YAML::Node s = n["schemes"]) {
    if (!s.IsSequence() || s.size() == 0) throw ConfigError("region.schemes: expected a nonempty list");
    b.schemes.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string p = "region.schemes[" + std::to_string(i) + "]";
      try {
        b.schemes.push_back(parse_scheme(text(s[i], p)));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(p + ": " + e.what());
      }
    }
  }
  optional_field(n, path, "boundary_samples", b.sampling.boundary_samples, size_of);
  optional_field(n, path, "fdma_grid", b.sampling.fdma_grid, size_of);
  if (b.realizations < 1) throw ConfigError("region.realizations: must be >= 1");
  if (b.sampling.boundary_samples < 2) throw ConfigError("region.boundary_samples: must be >= 2");
  if (b.sampling.fdma_grid < 2) throw ConfigError("region.fdma_grid: must be >= 2");
  return b;
}

DeployBlock deploy_block(const YAML::Node& n) {
  const std::string path = "deploy";
  check_keys(n, path, {"scheme", "weights", "x_min", "x_max", "step", "draws", "elements", "bits", "block_direct",
                       "min_rates"});
  DeployBlock b;
  const auto scheme = text(required(n, path, "scheme"), "deploy.scheme");
  try {
    b.scheme = parse_deploy_scheme(scheme);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("deploy.scheme: ") + e.what());
  }
  b.weights = numbers(required(n, path, "weights"), "deploy.weights");
  optional_field(n, path, "x_min", b.x_min, number);
  optional_field(n, path, "x_max", b.x_max, number);
  optional_field(n, path, "step", b.step, number);
  optional_field(n, path, "draws", b.draws, size_of);
  optional_field(n, path, "elements", b.elements, size_of);
  optional_field(n, path, "bits", b.bits, bits_of);
  optional_field(n, path, "block_direct", b.block_direct, boolean);
  if (const YAML::Node r = n["min_rates"]) b.min_rates = numbers(r, "deploy.min_rates");
  if (!(b.step > 0.0)) throw ConfigError("deploy.step: must be > 0");
  if (!(b.x_max >= b.x_min)) throw ConfigError("deploy.x_max: must be >= x_min");
  if (b.draws < 1) throw ConfigError("deploy.draws: must be >= 1");
  return b;
}

BeamformBlock beamform_block(const YAML::Node& n) {
  const std::string path = "beamform";
  check_keys(n, path, {"realizations", "antennas", "elements", "bits", "block_direct", "mode", "targets", "weights",
                       "max_iters", "tolerance", "multi_start", "reorder_each_iteration"});
  BeamformBlock b;
  optional_field(n, path, "realizations", b.realizations, size_of);
  optional_field(n, path, "antennas", b.antennas, size_of);
  optional_field(n, path, "elements", b.elements, size_of);
  if (n["bits"]) b.design.bits = bits_of(n["bits"], "beamform.bits");
  optional_field(n, path, "block_direct", b.block_direct, boolean);
  if (const YAML::Node m = n["mode"]) {
    const auto s = text(m, "beamform.mode");
    if (s == "power_min")
      b.design.mode = DesignMode::PowerMin;
    else if (s == "wsr")
      b.design.mode = DesignMode::WeightedSumRate;
    else
      throw ConfigError("beamform.mode: expected power_min or wsr, got '" + s + "'");
  }
  if (const YAML::Node t = n["targets"]) {
    const auto v = numbers(t, "beamform.targets");
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > 0.0))
      throw ConfigError("beamform.targets: expected two positive SINR targets [weak, strong]");
    b.design.targets = {v[0], v[1]};
  }
  if (const YAML::Node w = n["weights"]) {
    const auto v = numbers(w, "beamform.weights");
    if (v.size() != 2 || v[0] < 0.0 || v[1] < 0.0) throw ConfigError("beamform.weights: expected two weights >= 0");
    b.design.weight_m = v[0];
    b.design.weight_n = v[1];
  }
  optional_field(n, path, "max_iters", b.design.max_iters, size_of);
  optional_field(n, path, "tolerance", b.design.tolerance, number);
  optional_field(n, path, "multi_start", b.design.multi_start, boolean);
  optional_field(n, path, "reorder_each_iteration", b.design.reorder_each_iteration, boolean);
  if (b.realizations < 1) throw ConfigError("beamform.realizations: must be >= 1");
  if (b.antennas < 1) throw ConfigError("beamform.antennas: must be >= 1");
  return b;
}

ClusterBlock cluster_block(const YAML::Node& n) {
  const std::string path = "cluster";
  check_keys(n, path, {"design", "realizations", "antennas", "elements", "bits", "block_direct", "clusters",
                       "serving_ris", "gain_floors"});
  ClusterBlock b;
  if (const YAML::Node d = n["design"]) {
    const auto s = text(d, "cluster.design");
    if (s == "centralized")
      b.design = ClusterDesign::Centralized;
    else if (s == "distributed")
      b.design = ClusterDesign::Distributed;
    else
      throw ConfigError("cluster.design: expected centralized or distributed, got '" + s + "'");
  }
  optional_field(n, path, "realizations", b.realizations, size_of);
  optional_field(n, path, "antennas", b.antennas, size_of);
  if (const YAML::Node e = n["elements"]) b.elements = e.IsSequence() ? counts(e, "cluster.elements") : std::vector{size_of(e, "cluster.elements")};
  if (n["bits"]) b.bits = bits_of(n["bits"], "cluster.bits");
  optional_field(n, path, "block_direct", b.block_direct, boolean);
  const YAML::Node cs = required(n, path, "clusters");
  if (!cs.IsSequence()) throw ConfigError("cluster.clusters: expected a list of user-index lists");
  for (std::size_t i = 0; i < cs.size(); ++i) b.assignment.clusters.push_back(counts(cs[i], "cluster.clusters[" + std::to_string(i) + "]"));
  if (const YAML::Node s = n["serving_ris"]) b.assignment.serving_ris = counts(s, "cluster.serving_ris");
  if (const YAML::Node f = n["gain_floors"]) b.gain_floors = numbers(f, "cluster.gain_floors");
  if (b.realizations < 1) throw ConfigError("cluster.realizations: must be >= 1");
  if (b.antennas < 1) throw ConfigError("cluster.antennas: must be >= 1");
  return b;
}

std::string canonical_text(YAML::Node root, std::uint64_t seed) {
  root["seed"] = seed;
  YAML::Emitter out;
  out << root;
  return out.c_str();
}

// ---------------------------------------------------------------------------
// Artifact writing

using Row = std::vector<std::string>;

struct Writer {
  fs::path dir;
  Metadata metadata;
  std::vector<Artifact> artifacts;

  void csv(const std::string& name, const Row& header, const std::vector<Row>& rows, const Metadata& extra = {}) {
    Metadata m = metadata;
    for (const auto& [k, v] : extra) m[k] = v;
    std::ostringstream os;
    for (const auto& [k, v] : m) os << "# " << k << '=' << v << '\n';
    auto line = [&](const Row& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    put(name, os.str());
  }

  void put(const std::string& name, const std::string& bytes) {
    const fs::path p = dir / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << bytes;
    if (!out) throw std::runtime_error("write failed: " + p.string());
    artifacts.push_back({name, fnv1a_hex(bytes)});
  }

  // Files produced by other writers (region CSVs), registered by content.
  void track(const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    artifacts.push_back({name, fnv1a_hex(os.str())});
  }
};

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

std::string channels_hash(const std::vector<ChannelSet>& sets) {
  std::string bytes;
  for (const auto& c : sets) bytes += to_json(c).dump();
  return fnv1a_hex(bytes);
}

std::vector<bool> blocked_list(std::size_t users, bool blocked) { return std::vector<bool>(users, blocked); }

std::size_t user_count(const ExperimentConfig& c) {
  return c.channel.source == ChannelSource::Iid ? c.channel.users : c.geometry.users.size();
}

// ---------------------------------------------------------------------------
// Experiments

void run_region(const ExperimentConfig& c, Writer& w) {
  const RegionBlock& b = *c.region;
  const auto enumeration = b.bits ? ProfileEnumeration::discrete(b.elements, *b.bits)
                                  : ProfileEnumeration::sampled(b.elements, b.samples, c.seed);
  enumeration.validate();
  const double power = c.total_power();
  std::vector<Row> summary;
  std::vector<ChannelSet> all;
  for (std::size_t r = 0; r < b.realizations; ++r) {
    const ChannelSet ch = make_channels(c, 1, {b.elements}, blocked_list(user_count(c), false), r);
    all.push_back(ch);
    Metadata meta = w.metadata;
    meta["channel_hash"] = channels_hash({ch});
    meta["realization"] = std::to_string(r);
    meta["enumeration"] = enumeration.describe();
    meta["enumeration_size"] = std::to_string(enumeration.size());
    for (Scheme s : b.schemes) {
      const RateRegion stat = static_region(ch, enumeration, s, power, b.sampling);
      const std::string stem = "regions/r" + std::to_string(r) + "_" + to_string(s);
      fs::create_directories(w.dir / "regions");
      if (ch.users() == 2) {
        const RateRegion dyn = dynamic_region(std::span(&stat, 1));
        write_region_csv(stat, (w.dir / (stem + "_static.csv")).string(), meta);
        write_region_csv(dyn, (w.dir / (stem + "_dynamic.csv")).string(), meta);
        w.track(stem + "_static.csv");
        w.track(stem + "_static.csv.pieces.csv");
        w.track(stem + "_dynamic.csv");
        const double sa = region_area(stat), da = region_area(dyn);
        summary.push_back({fmt(r), to_string(s), std::to_string(enumeration.size()), fmt(sa), fmt(da), fmt(da / sa)});
      } else {
        std::vector<Row> rows;
        Row header;
        for (std::size_t k = 0; k < ch.users(); ++k) header.push_back("R" + std::to_string(k + 1));
        for (const auto& p : stat.boundary) {
          Row row;
          for (double v : p) row.push_back(fmt(v));
          rows.push_back(row);
        }
        Metadata extra = meta;
        extra["scheme"] = to_string(s);
        extra["mode"] = "static";
        extra["users"] = std::to_string(ch.users());
        w.csv(stem + "_static.csv", header, rows, extra);
        summary.push_back({fmt(r), to_string(s), std::to_string(enumeration.size()), "nan", "nan", "nan"});
      }
    }
  }
  w.csv("region_summary.csv", {"realization", "scheme", "profiles", "static_area", "dynamic_area", "area_ratio"}, summary,
        {{"channel_hash", channels_hash(all)}});
}

void run_deploy(const ExperimentConfig& c, Writer& w) {
  const DeploymentProblem problem = deployment_problem(c);
  const DeploymentResult res = optimize_deployment(problem);
  std::vector<ChannelSet> first;
  for (std::size_t d = 0; d < problem.channel_draws; ++d)
    first.push_back(deployment_channels(problem, problem.candidate_grid.front(), d));
  const std::string ch_hash = channels_hash(first);

  std::vector<Row> rows;
  for (const auto& p : res.per_x) rows.push_back({fmt(p.x), fmt(p.mean), fmt(p.stderr_)});
  w.csv("deploy.csv", {"x", "mean_wsr", "stderr"}, rows,
        {{"channel_hash", ch_hash}, {"scheme", to_string(problem.scheme)}});

  json j;
  j["experiment"] = "deploy";
  j["config_hash"] = c.config_hash();
  j["channel_hash"] = ch_hash;
  j["scheme"] = to_string(problem.scheme);
  j["weights"] = problem.weights;
  j["grid_step"] = c.deploy->step;
  j["candidates"] = problem.candidate_grid.size();
  j["optimum_x"] = res.optimum_x;
  j["optimum_value"] = res.optimum_value;
  j["tied_candidates"] = res.tied_candidates;
  w.put("deploy.json", j.dump(2) + "\n");
}

void run_beamform(const ExperimentConfig& c, Writer& w) {
  const BeamformBlock& b = *c.beamform;
  if (user_count(c) != 2) throw ConfigError("beamform: exactly two users required");
  AlternatingConfig design = b.design;
  design.noise = 1.0;
  design.power_budget = c.total_power();
  design.seed = c.seed;

  std::vector<Row> summary, trace, phases;
  std::vector<ChannelSet> all;
  for (std::size_t r = 0; r < b.realizations; ++r) {
    const ChannelSet ch = make_channels(c, b.antennas, {b.elements}, blocked_list(2, b.block_direct), r);
    all.push_back(ch);
    const AlternatingResult res = alternating_design(ch, design);
    double power = 0.0;
    for (const auto& v : res.beamformers.vectors) power += v.squaredNorm();
    summary.push_back({fmt(r), fmt(res.weak), fmt(res.strong), fmt(res.objective), fmt(power),
                       res.sic_ok ? "1" : "0", res.converged ? "1" : "0", fmt(res.trace.size())});
    for (const auto& t : res.trace)
      trace.push_back({fmt(r), fmt(t.iteration), fmt(t.objective), fmt(t.sic_margin), fmt(t.power)});
    const auto ph = res.profile.phases();
    for (std::size_t e = 0; e < ph.size(); ++e) phases.push_back({fmt(r), fmt(e), fmt(ph[e])});
  }
  const Metadata extra{{"channel_hash", channels_hash(all)},
                       {"mode", design.mode == DesignMode::PowerMin ? "power_min" : "wsr"}};
  w.csv("beamform.csv", {"realization", "weak", "strong", "objective", "power", "sic_ok", "converged", "iterations"},
        summary, extra);
  w.csv("beamform_trace.csv", {"realization", "iteration", "objective", "sic_margin", "power"}, trace, extra);
  w.csv("beamform_profile.csv", {"realization", "element", "phase"}, phases, extra);
}

// Per-cluster MRT toward the cluster's first user at unit RIS profiles, with
// the total power split evenly.
BeamformerSet cluster_beams(const ChannelSet& ch, const ClusterAssignment& a, double power) {
  std::vector<RisProfile> unit;
  for (std::size_t r = 0; r < ch.ris_count(); ++r) unit.push_back(RisProfile::unit(ch.elements(r)));
  BeamformerSet bf;
  const double scale = std::sqrt(power / static_cast<double>(a.clusters.size()));
  for (const auto& members : a.clusters) {
    const CVector h = equivalent_channel(ch, members.front(), unit);
    const double n = h.norm();
    bf.vectors.push_back(n > 0.0 ? CVector(scale * h.conjugate() / n)
                                 : CVector(CVector::Constant(h.size(), scale / std::sqrt(double(h.size())))));
  }
  return bf;
}

void run_cluster(const ExperimentConfig& c, Writer& w, std::vector<std::string>& warnings) {
  const ClusterBlock& b = *c.cluster;
  const std::size_t users = user_count(c);
  std::vector<Row> gains, summary;
  std::vector<ChannelSet> all;
  for (std::size_t r = 0; r < b.realizations; ++r) {
    const ChannelSet ch = make_channels(c, b.antennas, b.elements, blocked_list(users, b.block_direct), r);
    all.push_back(ch);
    const BeamformerSet bf = cluster_beams(ch, b.assignment, c.total_power());
    if (b.design == ClusterDesign::Centralized) {
      CentralizedOptions o;
      o.gain_floors = b.gain_floors;
      o.bits = b.bits;
      const auto res = centralized_cluster_design(ch, b.assignment, bf, o);
      if (!res.warning.empty()) warnings.push_back("realization " + std::to_string(r) + ": " + res.warning);
      for (std::size_t k = 0; k < res.cluster_gains.size(); ++k) gains.push_back({fmt(r), fmt(k), fmt(res.cluster_gains[k])});
      summary.push_back({fmt(r), fmt(res.leakage), fmt(res.signal), res.floors_met ? "1" : "0"});
    } else {
      DistributedOptions o;
      o.bits = b.bits;
      const auto res = distributed_cluster_design(ch, b.assignment, bf, o);
      for (std::size_t k = 0; k < res.cluster_gains.size(); ++k) gains.push_back({fmt(r), fmt(k), fmt(res.cluster_gains[k])});
      for (Eigen::Index i = 0; i < res.cross_leakage.rows(); ++i)
        for (Eigen::Index k = 0; k < res.cross_leakage.cols(); ++k)
          summary.push_back({fmt(r), fmt(static_cast<std::size_t>(i)), fmt(static_cast<std::size_t>(k)),
                             fmt(res.cross_leakage(i, k)), fmt(res.serving_power[static_cast<std::size_t>(i)])});
    }
  }
  const Metadata extra{{"channel_hash", channels_hash(all)},
                       {"design", b.design == ClusterDesign::Centralized ? "centralized" : "distributed"}};
  w.csv("cluster_gains.csv", {"realization", "cluster", "min_gain"}, gains, extra);
  if (b.design == ClusterDesign::Centralized)
    w.csv("cluster_summary.csv", {"realization", "leakage", "signal", "floors_met"}, summary, extra);
  else
    w.csv("cluster_leakage.csv", {"realization", "ris", "cluster", "cross_leakage", "serving_power"}, summary, extra);
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Region: return "region";
    case ExperimentKind::Deploy: return "deploy";
    case ExperimentKind::Beamform: return "beamform";
    case ExperimentKind::Cluster: return "cluster";
  }
  return "?";
}

std::string ExperimentConfig::config_hash() const { return fnv1a_hex(canonical); }

double ExperimentConfig::total_power() const {
  return channel.source == ChannelSource::Iid ? channel.power : channel.model.tx_power_watts();
}

void ExperimentConfig::validate() const {
  const bool geo = channel.source == ChannelSource::Geometry;
  const std::size_t users = geo ? geometry.users.size() : channel.users;
  auto need_ris = [&](std::size_t n, const std::string& what) {
    if (geo && geometry.ris.size() != n)
      throw ConfigError("geometry.ris: " + what + " needs " + std::to_string(n) + " RIS position(s)");
  };
  switch (experiment) {
    case ExperimentKind::Region:
      if (!region) throw ConfigError("region: required for experiment 'region'");
      need_ris(1, "a region experiment");
      if (users < 2) throw ConfigError("region: at least two users required");
      break;
    case ExperimentKind::Deploy:
      if (!deploy) throw ConfigError("deploy: required for experiment 'deploy'");
      if (!geo) throw ConfigError("channel.source: deploy experiments need geometry");
      need_ris(1, "a deploy experiment");
      if (deploy->weights.size() != users) throw ConfigError("deploy.weights: need one weight per user");
      break;
    case ExperimentKind::Beamform:
      if (!beamform) throw ConfigError("beamform: required for experiment 'beamform'");
      need_ris(1, "a beamform experiment");
      if (users != 2) throw ConfigError("beamform: exactly two users required");
      break;
    case ExperimentKind::Cluster:
      if (!cluster) throw ConfigError("cluster: required for experiment 'cluster'");
      need_ris(cluster->elements.size(), "cluster.elements");
      try {
        cluster->assignment.validate(users, cluster->elements.size());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("cluster.clusters: ") + e.what());
      }
      if (cluster->design == ClusterDesign::Centralized && cluster->elements.size() != 1)
        throw ConfigError("cluster.elements: the centralized design uses exactly one RIS");
      if (cluster->design == ClusterDesign::Distributed && cluster->assignment.serving_ris.empty())
        throw ConfigError("cluster.serving_ris: required for the distributed design");
      if (!cluster->gain_floors.empty() && cluster->gain_floors.size() != cluster->assignment.clusters.size())
        throw ConfigError("cluster.gain_floors: need one floor per cluster");
      break;
  }
}

ExperimentConfig parse_config(const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(source);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config: YAML syntax error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("config: empty document");
  check_keys(root, "", {"experiment", "seed", "output_dir", "channel", "geometry", "region", "deploy", "beamform", "cluster"});

  ExperimentConfig c;
  c.source_text = source;
  const auto kind = text(required(root, "", "experiment"), "experiment");
  if (kind == "region")
    c.experiment = ExperimentKind::Region;
  else if (kind == "deploy")
    c.experiment = ExperimentKind::Deploy;
  else if (kind == "beamform")
    c.experiment = ExperimentKind::Beamform;
  else if (kind == "cluster")
    c.experiment = ExperimentKind::Cluster;
  else
    throw ConfigError("experiment: expected region, deploy, beamform or cluster, got '" + kind + "'");
  c.seed = count(required(root, "", "seed"), "seed");
  if (const YAML::Node o = root["output_dir"]) c.output_dir = text(o, "output_dir");
  c.channel = channel_block(root["channel"]);
  if (const YAML::Node g = root["geometry"]) {
    c.geometry = geometry_block(g);
  } else if (c.channel.source == ChannelSource::Geometry) {
    throw ConfigError("geometry: required field missing");
  }
  if (const YAML::Node n = root["region"]) c.region = region_block(n);
  if (const YAML::Node n = root["deploy"]) c.deploy = deploy_block(n);
  if (const YAML::Node n = root["beamform"]) c.beamform = beamform_block(n);
  if (const YAML::Node n = root["cluster"]) c.cluster = cluster_block(n);
  c.canonical = canonical_text(root, c.seed);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.canonical = canonical_text(YAML::Load(config.source_text), seed);
}

ChannelSet make_channels(const ExperimentConfig& config, std::size_t antennas, const std::vector<std::size_t>& elements,
                         const std::vector<bool>& blocked, std::uint64_t draw) {
  if (config.channel.source == ChannelSource::Geometry) {
    ChannelLayout layout;
    layout.antennas = antennas;
    layout.elements = elements;
    layout.blocked_direct = blocked;
    return generate_channels(config.geometry, config.channel.model, layout, config.seed, draw);
  }
  const std::size_t users = config.channel.users;
  const auto nt = static_cast<Eigen::Index>(antennas);
  auto fill = [](Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
    return m;
  };
  ChannelSet ch;
  ch.blocked_direct = blocked;
  for (std::size_t k = 0; k < users; ++k) {
    auto rng = Rng::stream(config.seed, {draw, k, 0});
    ch.direct.push_back(blocked[k] ? CVector(CVector::Zero(nt)) : CVector(fill(rng, nt, 1).col(0)));
  }
  ch.ris_user.resize(elements.size());
  for (std::size_t r = 0; r < elements.size(); ++r) {
    const auto m = static_cast<Eigen::Index>(elements[r]);
    auto rng = Rng::stream(config.seed, {draw, 0, 16 + r});
    ch.bs_ris.push_back(fill(rng, m, nt));
    for (std::size_t k = 0; k < users; ++k) {
      auto rk = Rng::stream(config.seed, {draw, k, 32 + r});
      ch.ris_user[r].push_back(fill(rk, m, 1).col(0));
    }
  }
  ch.validate();
  return ch;
}

DeploymentProblem deployment_problem(const ExperimentConfig& config) {
  if (!config.deploy) throw ConfigError("deploy: block missing");
  const DeployBlock& b = *config.deploy;
  DeploymentProblem p;
  p.geometry_template = config.geometry;
  p.x_min = b.x_min;
  p.x_max = b.x_max;
  const auto n = static_cast<std::size_t>(std::llround((b.x_max - b.x_min) / b.step));
  for (std::size_t i = 0; i <= n; ++i) p.candidate_grid.push_back(b.x_min + b.step * static_cast<double>(i));
  p.weights = b.weights;
  p.scheme = b.scheme;
  p.channel_draws = b.draws;
  p.seed = config.seed;
  p.model = config.channel.model;
  p.elements = b.elements;
  p.profile_search = ProfileEnumeration::discrete(b.elements, b.bits);
  p.block_direct = b.block_direct;
  p.min_rates = b.min_rates;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("deploy: ") + e.what());
  }
  return p;
}

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = config.output_dir.empty() ? fs::path("results") / to_string(config.experiment) : fs::path(config.output_dir);
  fs::create_directories(dir);

  Writer w;
  w.dir = dir;
  w.metadata = {{"experiment", to_string(config.experiment)},
                {"config_hash", config.config_hash()},
                {"seed", std::to_string(config.seed)}};
  RunResult result;
  try {
    switch (config.experiment) {
      case ExperimentKind::Region: run_region(config, w); break;
      case ExperimentKind::Deploy: run_deploy(config, w); break;
      case ExperimentKind::Beamform: run_beamform(config, w); break;
      case ExperimentKind::Cluster: run_cluster(config, w, result.warnings); break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(to_string(config.experiment) + " experiment: " + e.what());
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json m;
  m["experiment"] = to_string(config.experiment);
  m["seed"] = config.seed;
  m["config_hash"] = config.config_hash();
  m["config"] = config.canonical;
  m["versions"] = {{"risnoma", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  m["wall_time_s"] = wall;
  m["warnings"] = result.warnings;
  json arts = json::array();
  for (const auto& a : w.artifacts) arts.push_back({{"path", a.path}, {"fnv1a", a.checksum}});
  m["artifacts"] = arts;
  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write " + manifest.string());
  out << m.dump(2) << '\n';

  result.output_dir = dir.string();
  result.artifacts = w.artifacts;
  result.manifest = manifest.string();
  return result;
}

CompareMetric parse_compare_metric(const std::string& s) {
  if (s == "containment") return CompareMetric::Containment;
  if (s == "area_ratio") return CompareMetric::AreaRatio;
  throw std::invalid_argument("unknown metric '" + s + "' (expected containment or area_ratio)");
}

bool region_contains(const RateRegion& outer, const RateRegion& inner, double tolerance) {
  std::vector<std::vector<double>> probes(inner.boundary.begin(), inner.boundary.end());
  if (inner.mode == ConfigMode::Dynamic)
    for (const auto& chain : inner.pieces)
      for (std::size_t i = 0; i + 1 < chain.size(); ++i)
        for (int s = 1; s < 8; ++s) {
          const double t = s / 8.0;
          probes.push_back({(1 - t) * chain[i][0] + t * chain[i + 1][0], (1 - t) * chain[i][1] + t * chain[i + 1][1]});
        }
  return std::all_of(probes.begin(), probes.end(),
                     [&](const std::vector<double>& p) { return contains(outer, p, tolerance); });
}

CompareReport compare_regions(const std::vector<std::string>& files, CompareMetric metric, const CompareOptions& options) {
  if (files.empty()) throw std::invalid_argument("compare: no region files given");
  std::vector<RegionFile> loaded;
  for (const auto& f : files) {
    loaded.push_back(read_region_csv(f));
    const auto& md = loaded.back().metadata;
    if (!md.count("scheme") || !md.count("users")) throw std::invalid_argument(f + ": missing scheme/users metadata");
  }
  const auto& md0 = loaded.front().metadata;
  for (std::size_t i = 1; i < loaded.size(); ++i) {
    const auto& md = loaded[i].metadata;
    if (md.at("users") != md0.at("users"))
      throw std::invalid_argument("compare: " + files[i] + " has " + md.at("users") + " users, " + files[0] + " has " +
                                  md0.at("users"));
    const auto a = md0.count("channel_hash") ? md0.at("channel_hash") : "";
    const auto b = md.count("channel_hash") ? md.at("channel_hash") : "";
    if (a != b && !options.allow_mismatch)
      throw std::invalid_argument("compare: channel_hash differs between " + files[0] + " and " + files[i] +
                                  " (pass --allow-mismatch to override)");
  }

  CompareReport rep;
  rep.files = files;
  std::ostringstream os;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    rep.areas.push_back(region_area(loaded[i].region));
    rep.ratio_to_first.push_back(rep.areas[i] / rep.areas[0]);
  }
  const std::size_t n = loaded.size();
  rep.contains.assign(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      rep.contains[i][j] = region_contains(loaded[i].region, loaded[j].region, options.tolerance);

  auto label = [&](std::size_t i) {
    return files[i] + " [" + to_string(loaded[i].region.scheme) + ", " + to_string(loaded[i].region.mode) + "]";
  };
  if (metric == CompareMetric::Containment) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j || n == 1)
          os << label(i) << " contains " << label(j) << ": " << (rep.contains[i][j] ? "yes" : "no") << '\n';
  } else {
    for (std::size_t i = 0; i < n; ++i)
      os << label(i) << " area=" << format_double(rep.areas[i]) << " ratio_to_first=" << format_double(rep.ratio_to_first[i])
         << '\n';
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (loaded[i].region.mode == ConfigMode::Dynamic && loaded[j].region.mode == ConfigMode::Static &&
            loaded[i].region.scheme == loaded[j].region.scheme)
          os << "dynamic/static " << to_string(loaded[i].region.scheme) << ": "
             << format_double(rep.areas[i] / rep.areas[j]) << " (" << files[i] << " / " << files[j] << ")\n";
  }
  rep.text = os.str();
  return rep;
}

}  // namespace risnoma
