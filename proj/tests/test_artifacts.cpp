#include <doctest.h>

#include <filesystem>

#include "mmpipe/artifacts.hpp"
#include "mmpipe/errors.hpp"
#include "testutil.hpp"

using namespace mmpipe;
using namespace mmpipe::artifacts;

TEST_CASE("content hashes are stable and content-sensitive") {
  CHECK(content_hash("abc") == content_hash("abc"));
  CHECK(content_hash("abc") != content_hash("abd"));
  CHECK(content_hash("").size() == 16);
}

TEST_CASE("atomic_write leaves no temp file behind") {
  testutil::TempDir dir("atomic");
  const auto target = dir.path() / "out.txt";
  atomic_write(target, "payload");
  CHECK(testutil::read_file(target) == "payload");
  CHECK_FALSE(std::filesystem::exists(dir.path() / "out.txt.tmp"));

  atomic_write(target, "replaced");
  CHECK(testutil::read_file(target) == "replaced");
}

TEST_CASE("manifest round-trip and verification") {
  testutil::TempDir dir("manifest");
  const auto input = dir.path() / "input.jsonl";
  const auto output = dir.path() / "output.jsonl";
  testutil::write_file(input, "{\"x\":1}\n");
  testutil::write_file(output, "{\"y\":2}\n");

  RunManifest manifest;
  manifest.command = "corpus-build";
  manifest.seed = 7;
  manifest.parameters["max_images"] = "30";
  manifest.inputs.push_back({input.string(), file_content_hash(input)});
  manifest.outputs.push_back({output.string(), file_content_hash(output)});

  const auto path = manifest_path_for(output);
  write_manifest(path, manifest);

  const RunManifest loaded = read_manifest(path);
  CHECK(loaded.command == "corpus-build");
  CHECK(loaded.seed == 7);
  CHECK(loaded.parameters.at("max_images") == "30");
  REQUIRE(loaded.inputs.size() == 1);
  REQUIRE(loaded.outputs.size() == 1);

  // Untouched run verifies clean.
  CHECK(verify_manifest(path).ok);

  // An edited output fails with the file named.
  testutil::write_file(output, "{\"y\":3}\n");
  const VerifyResult edited = verify_manifest(path);
  CHECK_FALSE(edited.ok);
  REQUIRE(edited.mismatches.size() == 1);
  CHECK(edited.mismatches[0].find(output.string()) != std::string::npos);

  // A missing file also fails and is named.
  std::filesystem::remove(output);
  const VerifyResult missing = verify_manifest(path);
  CHECK_FALSE(missing.ok);
  CHECK(missing.mismatches[0].find("missing") != std::string::npos);
}
