#include "risnoma/channel_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace risnoma {

namespace {

cd complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

json to_json(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(CVector(m.row(r).transpose())));
  return out;
}

json to_json(const RisProfile& profile) {
  json out;
  out["coefficients"] = to_json(profile.coefficients);
  out["resolution_bits"] = profile.resolution_bits ? json(*profile.resolution_bits) : json("continuous");
  return out;
}

json to_json(const ChannelSet& channels) {
  json out;
  out["users"] = channels.users();
  out["antennas"] = channels.antennas();
  json direct = json::array();
  for (const auto& d : channels.direct) direct.push_back(to_json(d));
  out["direct"] = std::move(direct);
  out["blocked_direct"] = channels.blocked_direct;
  json ris = json::array();
  for (std::size_t r = 0; r < channels.ris_count(); ++r) {
    json entry;
    entry["elements"] = channels.elements(r);
    entry["bs_ris"] = to_json(channels.bs_ris[r]);
    json g = json::array();
    for (const auto& v : channels.ris_user[r]) g.push_back(to_json(v));
    entry["ris_user"] = std::move(g);
    ris.push_back(std::move(entry));
  }
  out["ris"] = std::move(ris);
  return out;
}

CVector cvector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("complex vector must be an array");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

CMatrix cmatrix_from_json(const json& j, Eigen::Index cols) {
  CMatrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const CVector row = cvector_from_json(j[r]);
    if (row.size() != cols) throw std::invalid_argument("ragged complex matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

CMatrix cmatrix_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("complex matrix must be an array of rows");
  const Eigen::Index cols = j.empty() ? 0 : static_cast<Eigen::Index>(j[0].size());
  return cmatrix_from_json(j, cols);
}

RisProfile profile_from_json(const json& j) {
  RisProfile p;
  p.coefficients = cvector_from_json(j.at("coefficients"));
  const auto& bits = j.at("resolution_bits");
  if (bits.is_number_integer()) p.resolution_bits = bits.get<int>();
  p.validate();
  return p;
}

ChannelSet channels_from_json(const json& j) {
  ChannelSet ch;
  const auto nt = j.at("antennas").get<Eigen::Index>();
  for (const auto& d : j.at("direct")) ch.direct.push_back(cvector_from_json(d));
  ch.blocked_direct = j.at("blocked_direct").get<std::vector<bool>>();
  for (const auto& entry : j.at("ris")) {
    ch.bs_ris.push_back(cmatrix_from_json(entry.at("bs_ris"), nt));
    std::vector<CVector> g;
    for (const auto& v : entry.at("ris_user")) g.push_back(cvector_from_json(v));
    ch.ris_user.push_back(std::move(g));
  }
  ch.validate();
  return ch;
}

void save_channels(const ChannelSet& channels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(channels).dump(1) << '\n';
}

ChannelSet load_channels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return channels_from_json(json::parse(in));
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace risnoma
