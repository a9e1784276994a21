#include "metapll/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace metapll {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return fnv1a64(buf.str());
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)digest);
  return buf;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  std::uint64_t x = master ^ fnv1a64(stream);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["command"] = m.command;
  j["input_digests"] = m.input_digests;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  j["wall_clock_s"] = m.wall_clock_s;
  j["artifacts"] = m.artifacts;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << j.dump(2) << '\n';
}

}  // namespace metapll
