#include "mmmem/pipeline.hpp"

#include "mmmem/error.hpp"

namespace mmmem {

MemoryPyramid build_pyramid(std::span<const Clip> clips, const EngineConfig& config, const AdapterSet& adapters,
                            const SubtitleTrack* subtitles) {
    if (!adapters.embedder || !adapters.captioner || !adapters.extractor) {
        throw ContractError("build_pyramid: embedder, captioner and extractor are required");
    }
    MemoryPyramid p;
    p.dimension = adapters.embedder->dimension();
    p.seed = config.seed;
    p.build_config = config.to_map();
    p.sensory = build_sensory_buffer(clips, config.sensory, *adapters.embedder, *adapters.captioner, subtitles);
    p.episodic = consolidate_pass(p.sensory, rule_policy(config.thresholds));
    if (!p.episodic.stream.empty()) {
        p.episodic.stream = cluster_prototypes(p.episodic, config.cluster_k, config.seed);
        p.schema = build_schema(p.episodic.stream, *adapters.extractor, *adapters.embedder, config.schema);
    }
    return p;
}

}  // namespace mmmem
