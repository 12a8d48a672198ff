#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "mmpipe/corpus.hpp"

// MinHash signatures and LSH banding for near-duplicate text detection.
// Hashing is FNV-1a + SplitMix64 mixing throughout, so signatures are
// identical across platforms and runs.

namespace mmpipe::corpus {

inline constexpr std::uint64_t kMinHashEmptySentinel =
    std::numeric_limits<std::uint64_t>::max();

struct MinHashParams {
  int num_perm = 128;   // >= 16
  int shingle_len = 5;  // characters, >= 1
};

struct MinHashSignature {
  std::vector<std::uint64_t> hashes;  // length == num_perm
  int num_perm = 0;

  /// Fraction of equal slots; unbiased estimator of shingle-set Jaccard.
  double estimate_jaccard(const MinHashSignature& other) const;
};

/// Hashes of the distinct character shingles of `text`, sorted ascending.
/// Texts shorter than shingle_len contribute a single whole-text shingle.
std::vector<std::uint64_t> shingle_set(std::string_view text, int shingle_len);

/// Signature over the character-shingle set. The empty text (empty shingle
/// set) maps to an all-sentinel signature.
MinHashSignature minhash_signature(std::string_view text,
                                   const MinHashParams& params = {});

struct LshParams {
  int num_perm = 128;
  int bands = 32;
  int rows = 4;  // bands * rows must equal num_perm
  double threshold_jaccard = 0.8;
  int shingle_len = 5;
};

struct DupPair {
  std::size_t a = 0;  // indices into the input list, a < b
  std::size_t b = 0;
  double estimated_jaccard = 0.0;
  bool exact = false;  // byte-identical full text
};

/// Candidate pairs share at least one band bucket and have estimated Jaccard
/// >= threshold. Byte-identical documents are always reported (exact=true,
/// estimate 1.0) regardless of banding. Pairs are returned sorted by (a, b).
std::vector<DupPair> lsh_near_duplicates(std::span<const TextDoc> docs,
                                         const LshParams& params = {});

}  // namespace mmpipe::corpus
