#include "risnoma/region_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace risnoma {

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": bad numeric cell '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_region_csv(const RateRegion& region, const std::string& path, Metadata metadata) {
  if (region.users != 2) throw std::invalid_argument("write_region_csv: two users only");
  metadata["scheme"] = to_string(region.scheme);
  metadata["mode"] = to_string(region.mode);
  metadata["users"] = std::to_string(region.users);
  metadata["profiles"] = std::to_string(region.profiles);

  const std::filesystem::path p(path);
  if (region.mode == ConfigMode::Static && !region.pieces.empty()) {
    const std::string side = p.filename().string() + ".pieces.csv";
    metadata["pieces"] = side;
    std::ofstream out(p.parent_path() / side);
    if (!out) throw std::runtime_error("cannot write " + side);
    for (const auto& [k, v] : metadata)
      if (k != "pieces") out << "# " << k << '=' << v << '\n';
    out << "piece,R1,R2\n";
    for (std::size_t i = 0; i < region.pieces.size(); ++i)
      for (const auto& v : region.pieces[i])
        out << i << ',' << format_double(v[0]) << ',' << format_double(v[1]) << '\n';
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  out << "R1,R2\n";
  for (const auto& b : region.boundary) out << format_double(b[0]) << ',' << format_double(b[1]) << '\n';
}

RegionFile read_region_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  RegionFile file;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      file.metadata[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!header) {
      if (line != "R1,R2") throw std::runtime_error(path + ": expected header 'R1,R2'");
      header = true;
      continue;
    }
    const auto row = parse_row(line, path);
    if (row.size() != 2) throw std::runtime_error(path + ": expected two columns");
    file.region.boundary.push_back(row);
  }
  if (!header) throw std::runtime_error(path + ": missing header");
  auto& r = file.region;
  r.users = 2;
  if (auto it = file.metadata.find("scheme"); it != file.metadata.end()) r.scheme = parse_scheme(it->second);
  if (auto it = file.metadata.find("mode"); it != file.metadata.end()) r.mode = parse_config_mode(it->second);
  if (auto it = file.metadata.find("profiles"); it != file.metadata.end()) r.profiles = std::stoull(it->second);
  std::vector<Point2> pts;
  for (const auto& b : r.boundary) pts.push_back({b[0], b[1]});
  r.points = r.boundary;
  r.boundary.clear();
  for (const auto& p : pareto_frontier(pts)) r.boundary.push_back({p[0], p[1]});

  if (r.mode == ConfigMode::Dynamic) {
    r.pieces.push_back(downward_hull(pts));
  } else if (auto it = file.metadata.find("pieces"); it != file.metadata.end()) {
    const auto side = std::filesystem::path(path).parent_path() / it->second;
    std::ifstream pin(side);
    if (!pin) throw std::runtime_error("cannot read pieces file " + side.string());
    bool seen_header = false;
    while (std::getline(pin, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!seen_header) {
        seen_header = true;
        continue;
      }
      const auto row = parse_row(line, side.string());
      if (row.size() != 3) throw std::runtime_error(side.string() + ": expected three columns");
      const auto idx = static_cast<std::size_t>(row[0]);
      if (idx >= r.pieces.size()) r.pieces.resize(idx + 1);
      r.pieces[idx].push_back({row[1], row[2]});
    }
  }
  return file;
}

}  // namespace risnoma
