#include "run_util.hpp"

#include <fstream>
#include <thread>

#include "mmpipe/errors.hpp"

namespace mmpipe::cli {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

RunWriter::RunWriter(std::string command, std::uint64_t seed) {
  manifest_.command = std::move(command);
  manifest_.seed = seed;
}

void RunWriter::set_param(const std::string& key, const std::string& value) {
  manifest_.parameters[key] = value;
}

void RunWriter::add_input(const std::filesystem::path& path) {
  manifest_.inputs.push_back(
      {path.string(), artifacts::file_content_hash(path)});
}

void RunWriter::stage_output(const std::filesystem::path& path,
                             std::string content) {
  staged_.emplace_back(path, std::move(content));
}

void RunWriter::commit() {
  if (staged_.empty()) return;
  for (const auto& [path, content] : staged_) {
    artifacts::atomic_write(path, content);
    manifest_.outputs.push_back({path.string(), artifacts::content_hash(content)});
  }
  artifacts::write_manifest(artifacts::manifest_path_for(staged_.front().first),
                            manifest_);
}

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace mmpipe::cli
