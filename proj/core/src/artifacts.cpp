#include "mmpipe/artifacts.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmpipe/detrng.hpp"
#include "mmpipe/errors.hpp"

namespace mmpipe::artifacts {

namespace fs = std::filesystem;
using nlohmann::json;

std::string content_hash(std::string_view bytes) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0')
      << rng::fnv1a64(bytes);
  return out.str();
}

std::string file_content_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return content_hash(buffer.str());
}

void atomic_write(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path manifest_path_for(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["parameters"] = manifest.parameters;
  j["inputs"] = json::array();
  for (const FileRecord& rec : manifest.inputs) {
    j["inputs"].push_back({{"path", rec.path}, {"hash", rec.hash}});
  }
  j["outputs"] = json::array();
  for (const FileRecord& rec : manifest.outputs) {
    j["outputs"].push_back({{"path", rec.path}, {"hash", rec.hash}});
  }
  atomic_write(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  RunManifest manifest;
  manifest.command = j.value("command", std::string{});
  manifest.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("parameters")) {
    manifest.parameters =
        j["parameters"].get<std::map<std::string, std::string>>();
  }
  for (const char* key : {"inputs", "outputs"}) {
    if (!j.contains(key)) continue;
    for (const json& rec : j[key]) {
      FileRecord file{rec.at("path").get<std::string>(),
                      rec.at("hash").get<std::string>()};
      if (std::string_view(key) == "inputs") {
        manifest.inputs.push_back(std::move(file));
      } else {
        manifest.outputs.push_back(std::move(file));
      }
    }
  }
  return manifest;
}

VerifyResult verify_manifest(const fs::path& path) {
  const RunManifest manifest = read_manifest(path);
  const fs::path base = path.parent_path();
  VerifyResult result;

  const auto check = [&](const FileRecord& rec, const char* role) {
    fs::path file(rec.path);
    if (file.is_relative()) file = base / file;
    if (!fs::exists(file)) {
      result.ok = false;
      result.mismatches.push_back(std::string(role) + " missing: " +
                                  rec.path);
      return;
    }
    const std::string actual = file_content_hash(file);
    if (actual != rec.hash) {
      result.ok = false;
      result.mismatches.push_back(std::string(role) + " hash mismatch: " +
                                  rec.path + " expected " + rec.hash +
                                  " got " + actual);
    }
  };

  for (const FileRecord& rec : manifest.inputs) check(rec, "input");
  for (const FileRecord& rec : manifest.outputs) check(rec, "output");
  return result;
}

}  // namespace mmpipe::artifacts
