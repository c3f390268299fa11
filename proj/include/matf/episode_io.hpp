#pragma once

#include <string>
#include <vector>

#include "matf/types.hpp"

namespace matf::data {

// Line-oriented episode container: first line is a JSON header
// {"format":"matf-episodes","version":1}, then one JSON record per episode.
// Doubles are serialized with shortest round-trip representation, so
// write -> read is bit-exact. Field names are documented in the README.
inline constexpr int kEpisodeFormatVersion = 1;

void write_episodes(const std::string& path, const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes(const std::string& path);

}  // namespace matf::data
