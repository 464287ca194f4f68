#pragma once

#include <string>

#include "fedvb/vbnn.hpp"

namespace fedvb {

/// Binary model snapshot: "FVBN" magic, format version, mode, layer layout,
/// then little-endian doubles for every tensor. Loads reject unknown magics
/// and versions and truncated payloads.
void save_checkpoint(const VbnnModel& model, const std::string& path);
VbnnModel load_checkpoint(const std::string& path);

}  // namespace fedvb
