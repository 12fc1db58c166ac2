#pragma once

#include <string>

#include "rigkit/core/types.hpp"

namespace rigkit {

/// Serializes the asset to the rig JSON format (UTF-8, sorted keys, doubles
/// in shortest round-trip decimal form).
std::string rig_to_json(const RigAsset& asset);

/// Parses a rig JSON document. Throws ParseError on malformed input and
/// ValidationError when skin rows do not sum to 1 within 1e-5 or shapes
/// disagree with the skeleton/mesh.
RigAsset rig_from_json(const std::string& text);

RigAsset load_rig(const std::string& path);
void save_rig(const RigAsset& asset, const std::string& path);

}  // namespace rigkit
