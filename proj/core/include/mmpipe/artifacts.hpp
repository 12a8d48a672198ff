#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

// Run reproducibility support: content hashing, atomic file writes, and the
// run manifest that records inputs, parameters, seed, and output hashes so a
// finished run can be re-verified byte-for-byte.

namespace mmpipe::artifacts {

/// FNV-1a 64 over the file bytes, as 16 lowercase hex chars.
std::string file_content_hash(const std::filesystem::path& path);
std::string content_hash(std::string_view bytes);

/// Writes content to `<path>.tmp` and renames over path. Either the complete
/// file appears or nothing does.
void atomic_write(const std::filesystem::path& path, std::string_view content);

struct FileRecord {
  std::string path;  // as recorded; relative paths resolve against the manifest
  std::string hash;
};

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> parameters;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
};

/// Conventional manifest location for a primary output file.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

void write_manifest(const std::filesystem::path& path,
                    const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> mismatches;  // one line per failed file
};

/// Recomputes the hash of every referenced input and output.
VerifyResult verify_manifest(const std::filesystem::path& path);

}  // namespace mmpipe::artifacts
