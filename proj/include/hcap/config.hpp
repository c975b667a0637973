#pragma once

#include "hcap/fitter.hpp"
#include "hcap/synthgen.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hcap {

/// Everything a config file can override; unspecified keys keep their defaults.
struct RunConfig {
  FitConfig fit;
  SynthConfig synth;
};

/// Strict JSON parse: unknown keys and wrong types throw std::invalid_argument.
RunConfig parseRunConfig(const std::string& text);
RunConfig loadRunConfig(const std::filesystem::path& path, std::string* text = nullptr);

/// Full config (all defaults filled in) as pretty JSON.
std::string runConfigJson(const RunConfig& config);

std::uint64_t fnv1a(const std::string& text);
std::string hexDigest(std::uint64_t value);

struct RunManifest {
  std::string command;
  std::string configHash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> paths; // role -> path
  std::vector<std::pair<std::string, double>> timings; // stage -> seconds
  std::vector<std::pair<std::string, std::string>> notes;

  void write(const std::filesystem::path& path) const;
};

inline constexpr const char* kVersion = "1.0.0";

} // namespace hcap
