#pragma once
// Bottom-up construction: frames -> sensory buffer -> episodic stream ->
// symbolic schema.

#include <vector>

#include "mmmem/adapters.hpp"
#include "mmmem/config.hpp"
#include "mmmem/pyramid.hpp"

namespace mmmem {

MemoryPyramid build_pyramid(std::span<const Clip> clips, const EngineConfig& config, const AdapterSet& adapters,
                            const SubtitleTrack* subtitles = nullptr);

}  // namespace mmmem
