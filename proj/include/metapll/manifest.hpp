// Run provenance: every CLI invocation records its inputs (by content hash),
// seed and produced artifacts in a small JSON manifest next to the outputs.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace metapll {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;  // subcommand plus arguments as invoked
  std::map<std::string, std::string> input_digests;  // path -> fnv1a64 hex
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  double wall_clock_s = 0.0;
  std::vector<std::string> artifacts;
};

std::uint64_t fnv1a64(std::string_view data);

// Digest of a file's bytes; throws std::runtime_error when unreadable.
std::uint64_t fnv1a64_file(const std::string& path);

std::string digest_hex(std::uint64_t digest);

// Deterministic sub-seed for a named random stream, so one --seed drives
// every stochastic stage without coupling them.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace metapll
