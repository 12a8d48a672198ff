#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmpipe/artifacts.hpp"

// Shared plumbing for CLI subcommands: input line reading, run manifests,
// and exit-code classification.

namespace mmpipe::cli {

// Thrown for argument/precondition problems detected before a command runs.
// Mapped to exit code 2, unlike module errors mid-run (4) or unreadable
// inputs (3).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a line-delimited file, skipping blank lines. Throws IoError when the
/// file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Accumulates output records and commits them atomically together with the
/// run manifest. Nothing appears on disk unless commit() runs to completion.
class RunWriter {
 public:
  RunWriter(std::string command, std::uint64_t seed);

  void set_param(const std::string& key, const std::string& value);
  void add_input(const std::filesystem::path& path);

  /// Queues a full file body for the given path.
  void stage_output(const std::filesystem::path& path, std::string content);

  /// Writes every staged output atomically, then the manifest next to the
  /// first staged output.
  void commit();

 private:
  artifacts::RunManifest manifest_;
  std::vector<std::pair<std::filesystem::path, std::string>> staged_;
};

/// Runs fn(i) for i in [0, n) across `jobs` threads, preserving result order.
/// fn must be pure; with jobs <= 1 it degenerates to a plain loop.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mmpipe::cli
