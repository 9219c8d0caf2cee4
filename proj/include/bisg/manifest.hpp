#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "bisg/csv.hpp"
#include "bisg/rng.hpp"
#include "bisg/version.hpp"

#include "json.hpp"

namespace bisg {

/// Reproducibility record emitted alongside every command's outputs: rerun
/// with the same command line, config, inputs, and seed and the outputs are
/// byte-identical.
struct RunManifest {
  std::string command_line;
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path -> digest
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_time_seconds = 0.0;

  void add_input(const std::string& path) {
    input_digests.emplace_back(path, digest_hex(read_file_bytes(path)));
  }

  static std::string digest_hex(std::string_view bytes) {
    std::uint64_t h = fnv1a64(bytes);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command_line"] = command_line;
    j["config_digest"] = config_digest;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [path, digest] : input_digests) inputs[path] = digest;
    j["input_digests"] = std::move(inputs);
    j["seed"] = seed;
    j["version"] = version;
    j["wall_time_seconds"] = wall_time_seconds;
    return j;
  }
};

}  // namespace bisg
