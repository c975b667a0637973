#pragma once

#include "hcap/assets.hpp"
#include "hcap/grad.hpp"
#include "hcap/losses.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hcap {

/// Entry point of the `hcap` tool; returns the process exit code.
int runCli(int argc, const char* const* argv);

/// "3", "0..6", "0,2,4..5" -> sorted unique indices. Throws std::invalid_argument.
std::vector<int> parseIndexList(const std::string& text);

/// "A..B" (inclusive) or a single frame "A".
std::pair<int, int> parseFrameRange(const std::string& text);

struct GradcheckRow {
  int config = 0;
  std::string objective; // pose | deform
  std::string block;
  double error = 0.0;
};

/// Finite-difference check of both stage objectives on `configs` random
/// synthetic frames (2-7 cameras, perturbed pose, random graph parameters).
std::vector<GradcheckRow> gradcheckSuite(const CharacterRig& rig, std::uint64_t seed, int configs, const FdOptions& options, const LossWeights& weights = {});

} // namespace hcap
