#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmmem/episodic.hpp"
#include "mmmem/schema.hpp"
#include "mmmem/sensory.hpp"

namespace mmmem {

// A complete three-layer memory. Treated as immutable once built or loaded.
struct MemoryPyramid {
    std::size_t dimension = 0;
    std::vector<SensoryItem> sensory;
    ConsolidationState episodic;
    SchemaGraph schema;
    std::uint64_t seed = 0;
    // Build-time configuration, recorded as provenance.
    std::map<std::string, std::string> build_config;

    bool operator==(const MemoryPyramid&) const = default;
};

}  // namespace mmmem
