#pragma once

#include <json.hpp>

#include <string>

#include "risnoma/channel.hpp"

namespace risnoma {

using nlohmann::json;

// Complex numbers are serialized as [re, im] pairs. Doubles are written in
// shortest round-trip form, so import(export(x)) == x bit for bit.

json to_json(const CVector& v);
json to_json(const CMatrix& m);  // array of rows
json to_json(const RisProfile& profile);
json to_json(const ChannelSet& channels);

CVector cvector_from_json(const json& j);
CMatrix cmatrix_from_json(const json& j);
RisProfile profile_from_json(const json& j);
ChannelSet channels_from_json(const json& j);

void save_channels(const ChannelSet& channels, const std::string& path);
ChannelSet load_channels(const std::string& path);

/// 64-bit FNV-1a digest, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace risnoma
