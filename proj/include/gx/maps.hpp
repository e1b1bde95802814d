#pragma once

#include <string>
#include <vector>

#include "gx/gridworld.hpp"

namespace gx {

// Builtin training maps (level-1 .. level-5, roughly increasing difficulty)
// plus assorted held-out test layouts. All are wall-bounded with a single
// connected free region.
const std::vector<std::string>& builtin_map_ids();
bool is_builtin_map(const std::string& id);
std::string builtin_map_text(const std::string& id);

// Builtin id, otherwise a file path.
GroundTruthMap load_map(const std::string& id_or_path);

}  // namespace gx
