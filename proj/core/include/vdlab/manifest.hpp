#pragma once

#include <cstdint>
#include <string>

#include "vdlab/config.hpp"

namespace vdlab {

// Every artifact directory gets a manifest.json sufficient to re-run the
// producing command bit-identically: resolved config, overrides, seed.
// Deliberately no timestamps.
void write_run_manifest(const std::string& dir, const std::string& command,
                        const Config& resolved, const Config& overrides,
                        std::uint64_t seed, int jobs);

}  // namespace vdlab
