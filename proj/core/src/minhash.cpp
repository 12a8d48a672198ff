#include "mmpipe/minhash.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mmpipe/detrng.hpp"
#include "mmpipe/errors.hpp"

namespace mmpipe::corpus {

namespace {

// Fixed stream tags so permutation seeds and band keys never collide with
// document content hashes.
constexpr std::uint64_t kPermSeedTag = 0x6D696E686173682Eull;
constexpr std::uint64_t kBandSeedTag = 0x6C73682E62616E64ull;

std::uint64_t perm_seed(int perm_index) {
  return rng::combine(kPermSeedTag, static_cast<std::uint64_t>(perm_index));
}

}  // namespace

double MinHashSignature::estimate_jaccard(const MinHashSignature& other) const {
  if (num_perm != other.num_perm || num_perm == 0) {
    throw InvalidParams("signatures have different num_perm");
  }
  int equal = 0;
  for (int i = 0; i < num_perm; ++i) {
    if (hashes[static_cast<std::size_t>(i)] ==
        other.hashes[static_cast<std::size_t>(i)]) {
      ++equal;
    }
  }
  return static_cast<double>(equal) / static_cast<double>(num_perm);
}

std::vector<std::uint64_t> shingle_set(std::string_view text, int shingle_len) {
  if (shingle_len < 1) throw InvalidParams("shingle_len must be >= 1");
  std::set<std::uint64_t> shingles;
  const auto len = static_cast<std::size_t>(shingle_len);
  if (text.empty()) {
    return {};
  }
  if (text.size() <= len) {
    shingles.insert(rng::fnv1a64(text));
  } else {
    for (std::size_t i = 0; i + len <= text.size(); ++i) {
      shingles.insert(rng::fnv1a64(text.substr(i, len)));
    }
  }
  return {shingles.begin(), shingles.end()};
}

MinHashSignature minhash_signature(std::string_view text,
                                   const MinHashParams& params) {
  if (params.num_perm < 16) throw InvalidParams("num_perm must be >= 16");
  const std::vector<std::uint64_t> shingles =
      shingle_set(text, params.shingle_len);

  MinHashSignature sig;
  sig.num_perm = params.num_perm;
  sig.hashes.assign(static_cast<std::size_t>(params.num_perm),
                    kMinHashEmptySentinel);
  for (int p = 0; p < params.num_perm; ++p) {
    const std::uint64_t seed = perm_seed(p);
    std::uint64_t best = kMinHashEmptySentinel;
    for (const std::uint64_t s : shingles) {
      best = std::min(best, rng::mix64(s ^ seed));
    }
    sig.hashes[static_cast<std::size_t>(p)] = best;
  }
  return sig;
}

std::vector<DupPair> lsh_near_duplicates(std::span<const TextDoc> docs,
                                         const LshParams& params) {
  if (params.bands * params.rows != params.num_perm) {
    throw InvalidParams("bands * rows must equal num_perm");
  }

  std::vector<MinHashSignature> sigs;
  sigs.reserve(docs.size());
  MinHashParams mh{params.num_perm, params.shingle_len};
  for (const TextDoc& doc : docs) {
    sigs.push_back(minhash_signature(doc.text, mh));
  }

  std::set<std::pair<std::size_t, std::size_t>> candidates;

  // Exact-duplicate path: group by full-text hash, then confirm bytes.
  {
    std::map<std::uint64_t, std::vector<std::size_t>> by_hash;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      by_hash[rng::fnv1a64(docs[i].text)].push_back(i);
    }
    for (const auto& [hash, members] : by_hash) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          if (docs[members[i]].text == docs[members[j]].text) {
            candidates.emplace(members[i], members[j]);
          }
        }
      }
    }
  }

  // Banding: one bucket table per band, keyed by the hash of the band's rows.
  for (int band = 0; band < params.bands; ++band) {
    std::map<std::uint64_t, std::vector<std::size_t>> buckets;
    const int begin = band * params.rows;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      std::uint64_t key =
          rng::combine(kBandSeedTag, static_cast<std::uint64_t>(band));
      for (int r = 0; r < params.rows; ++r) {
        key = rng::combine(key,
                           sigs[i].hashes[static_cast<std::size_t>(begin + r)]);
      }
      buckets[key].push_back(i);
    }
    for (const auto& [key, members] : buckets) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          candidates.emplace(members[i], members[j]);
        }
      }
    }
  }

  std::vector<DupPair> out;
  for (const auto& [a, b] : candidates) {
    const bool exact = docs[a].text == docs[b].text;
    const double est = exact ? 1.0 : sigs[a].estimate_jaccard(sigs[b]);
    if (exact || est >= params.threshold_jaccard) {
      out.push_back({a, b, est, exact});
    }
  }
  return out;  // std::set iteration is already (a, b)-sorted
}

}  // namespace mmpipe::corpus
