#pragma once

#include <map>
#include <string>

#include "risnoma/region.hpp"

namespace risnoma {

using Metadata = std::map<std::string, std::string>;

struct RegionFile {
  RateRegion region;
  Metadata metadata;
};

/// Writes one row per boundary point (columns R1,R2) after '#'-prefixed
/// key=value metadata lines. Static regions also get a sidecar
/// `<path>.pieces.csv` (columns piece,R1,R2) holding the per-profile convex
/// pieces, referenced from the `pieces` metadata key.
void write_region_csv(const RateRegion& region, const std::string& path, Metadata metadata);

/// Reads a file written by write_region_csv. The point set of the loaded
/// region is its boundary.
RegionFile read_region_csv(const std::string& path);

/// "%.17g" formatting, used by every numeric artifact.
std::string format_double(double v);

}  // namespace risnoma
