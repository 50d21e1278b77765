#pragma once
// Flat key=value engine configuration. One key per line, '#' starts a
// comment, unknown keys and out-of-range values are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "mmmem/episodic.hpp"
#include "mmmem/grpo.hpp"
#include "mmmem/retrieval.hpp"
#include "mmmem/schema.hpp"
#include "mmmem/sensory.hpp"

namespace mmmem {

struct EngineConfig {
    // retrieval
    RetrievalConfig retrieval;
    // construction
    SensoryConfig sensory;
    std::size_t segment_frames = 300;
    MergeThresholds thresholds;
    std::optional<std::size_t> cluster_k;  // 0 in the file means "auto"
    SchemaConfig schema;
    std::size_t embed_dim = 64;
    double scorer_scale = 4.0;
    // SIB-GRPO
    PolicyConfig policy;
    ToyTrainingOptions toy;
    std::uint64_t seed = 42;

    // Canonical key=value form, keys sorted; used for manifests and tests.
    std::map<std::string, std::string> to_map() const;
};

EngineConfig parse_config(std::istream& in);
EngineConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const EngineConfig& config);

}  // namespace mmmem
