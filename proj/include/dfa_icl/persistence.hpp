#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <openssl/evp.h>
#include <unistd.h>

#include "json.hpp"

#include "dfa_icl/baselines.hpp"
#include "dfa_icl/errors.hpp"
#include "dfa_icl/serialization.hpp"
#include "dfa_icl/taskgen.hpp"

namespace dfa_icl {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaMajor = 1;
inline constexpr int kSchemaMinor = 0;

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("EVP_Digest(sha256) failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// see either the old or the new content.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct RunManifest {
  int schema_major = kSchemaMajor;
  int schema_minor = kSchemaMinor;
  std::uint64_t master_seed = 0;
  std::string tool_version{kToolVersion};
  int num_dfas = 0;
  int num_states = 3;
  TaskConfig config;
  NgramTieRule tie_rule = NgramTieRule::RightmostOccurrence;
  /// Pilot draws come from their own child stream and never shift the
  /// instance streams.
  std::string pilot_stream = "derived";
  /// Per run-model invocation: predictor id -> {format, endpoint snapshot}.
  json model_runs = json::object();
  std::map<std::string, std::string> files;  // artifact name -> sha256
};

inline json manifest_to_json(const RunManifest& m) {
  return json{{"schema_version", std::to_string(m.schema_major) + "." + std::to_string(m.schema_minor)},
              {"master_seed", std::to_string(m.master_seed)},
              {"tool_version", m.tool_version},
              {"task_kind", std::string(to_string(m.config.kind))},
              {"num_dfas", m.num_dfas},
              {"num_states", m.num_states},
              {"num_instances", m.config.num_instances},
              {"num_examples", m.config.num_examples},
              {"config", config_to_json(m.config)},
              {"tie_breaks",
               {{"ngram_t", std::string(to_string(m.tie_rule))},
                {"completions", "lexicographic-smallest"},
                {"brute_force_t", "predict-1"},
                {"null_t", "predict-1"}}},
              {"pilot_stream", m.pilot_stream},
              {"model_runs", m.model_runs},
              {"files", m.files}};
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  const auto version = j.at("schema_version").get<std::string>();
  const auto dot = version.find('.');
  try {
    m.schema_major = std::stoi(version.substr(0, dot));
    m.schema_minor = dot == std::string::npos ? 0 : std::stoi(version.substr(dot + 1));
  } catch (const std::exception&) {
    throw SchemaVersionUnsupported("unparseable schema_version " + version);
  }
  if (m.schema_major != kSchemaMajor)
    throw SchemaVersionUnsupported("schema major version " + std::to_string(m.schema_major) + " is not supported");
  m.master_seed = std::stoull(j.at("master_seed").get<std::string>());
  m.tool_version = j.at("tool_version").get<std::string>();
  m.num_dfas = j.at("num_dfas").get<int>();
  m.num_states = j.value("num_states", 3);
  m.config = config_from_json(j.at("config"));
  const auto rule = j.at("tie_breaks").at("ngram_t").get<std::string>();
  m.tie_rule = rule == "last-revealed-output" ? NgramTieRule::LastRevealedOutput : NgramTieRule::RightmostOccurrence;
  m.pilot_stream = j.value("pilot_stream", std::string("derived"));
  m.model_runs = j.value("model_runs", json::object());
  m.files = j.at("files").get<std::map<std::string, std::string>>();
  return m;
}

/// A run directory: artifact files plus manifest.json, which is written last
/// and records the SHA-256 of every artifact. A directory without a manifest
/// is an incomplete run. Single writer; readers may open it concurrently
/// once the manifest exists.
class RunStore {
 public:
  static constexpr std::string_view kManifest = "manifest.json";

  /// Creates (or overwrites) a run: writes each artifact, then the manifest.
  static RunStore write_run(const std::filesystem::path& dir, RunManifest manifest,
                            const std::map<std::string, std::string>& artifacts) {
    std::filesystem::create_directories(dir);
    manifest.files.clear();
    for (const auto& [name, content] : artifacts) {
      write_file_atomic(dir / name, content);
      manifest.files[name] = sha256_hex(content);
    }
    RunStore store(dir, std::move(manifest));
    store.save_manifest();
    return store;
  }

  /// Opens a finalized run and verifies every recorded hash.
  static RunStore load_run(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kManifest;
    if (!std::filesystem::exists(manifest_path))
      throw IncompleteRun("no " + std::string(kManifest) + " in " + dir.string());
    json j;
    try {
      j = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
      throw IncompleteRun("unreadable manifest: " + std::string(e.what()));
    }
    RunStore store(dir, manifest_from_json(j));
    for (const auto& [name, hash] : store.manifest_.files) store.verified_read(name, hash);
    return store;
  }

  const RunManifest& manifest() const { return manifest_; }
  RunManifest& manifest() { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }

  bool has(std::string_view name) const { return manifest_.files.count(std::string(name)) > 0; }

  std::string get(std::string_view name) const {
    auto it = manifest_.files.find(std::string(name));
    if (it == manifest_.files.end()) throw MissingArtifact("run has no " + std::string(name));
    return verified_read(it->first, it->second);
  }

  /// Writes one artifact and re-finalizes the manifest.
  void put(std::string_view name, std::string_view content) {
    write_file_atomic(dir_ / name, content);
    manifest_.files[std::string(name)] = sha256_hex(content);
    save_manifest();
  }

  void save_manifest() const { write_file_atomic(dir_ / kManifest, manifest_to_json(manifest_).dump(2) + "\n"); }

 private:
  RunStore(std::filesystem::path dir, RunManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {}

  std::string verified_read(const std::string& name, const std::string& hash) const {
    if (!std::filesystem::exists(dir_ / name)) throw MissingArtifact("missing artifact " + name);
    std::string content = read_file(dir_ / name);
    if (sha256_hex(content) != hash) throw HashMismatch(name + " does not match its manifest hash");
    return content;
  }

  std::filesystem::path dir_;
  RunManifest manifest_;
};

}  // namespace dfa_icl
