#include <doctest.h>

#include <cmath>
#include <set>

#include "mmpipe/detrng.hpp"
#include "mmpipe/errors.hpp"
#include "mmpipe/minhash.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace mmpipe;
using namespace mmpipe::corpus;

TEST_CASE("minhash signatures are deterministic") {
  const std::string text = "the quick brown fox jumps over the lazy dog";
  const MinHashSignature a = minhash_signature(text);
  const MinHashSignature b = minhash_signature(text);
  CHECK(a.hashes == b.hashes);
  CHECK(a.num_perm == 128);
  CHECK(doctest::Approx(a.estimate_jaccard(b)) == 1.0);
}

TEST_CASE("empty text maps to the all-sentinel signature") {
  const MinHashSignature sig = minhash_signature("");
  for (const std::uint64_t h : sig.hashes) {
    CHECK(h == kMinHashEmptySentinel);
  }
}

TEST_CASE("disjoint shingle sets estimate near zero") {
  MinHashParams params;
  params.shingle_len = 1;
  const MinHashSignature a = minhash_signature("abcd", params);
  const MinHashSignature b = minhash_signature("wxyz", params);
  CHECK(oracles::exact_jaccard(shingle_set("abcd", 1), shingle_set("wxyz", 1)) ==
        0.0);
  CHECK(a.estimate_jaccard(b) <= 0.05);
}

TEST_CASE("constructed Jaccard 0.5 estimates within 0.15 at 128 perms") {
  // {a,b,c,d} vs {a..h}: intersection 4, union 8.
  MinHashParams params;
  params.shingle_len = 1;
  const double exact = oracles::exact_jaccard(shingle_set("abcd", 1),
                                              shingle_set("abcdefgh", 1));
  REQUIRE(exact == doctest::Approx(0.5));
  const MinHashSignature a = minhash_signature("abcd", params);
  const MinHashSignature b = minhash_signature("abcdefgh", params);
  CHECK(std::abs(a.estimate_jaccard(b) - exact) <= 0.15);
}

TEST_CASE("minhash estimator mean absolute error is within 1.5/sqrt(perms)") {
  rng::CounterRng gen(101);
  MinHashParams params;  // 128 perms, 5-char shingles
  double total_err = 0.0;
  const int pairs = 1000;
  for (int i = 0; i < pairs; ++i) {
    // Random overlap: shared prefix + independent tails.
    const std::size_t shared = 20 + gen.next_below(120);
    const std::size_t tail = gen.next_below(120);
    const std::string common = testutil::random_letters(gen, shared);
    const std::string a = common + testutil::random_letters(gen, tail);
    const std::string b = common + testutil::random_letters(gen, tail);
    const double exact = oracles::exact_jaccard(
        shingle_set(a, params.shingle_len), shingle_set(b, params.shingle_len));
    const double est = minhash_signature(a, params)
                           .estimate_jaccard(minhash_signature(b, params));
    total_err += std::abs(est - exact);
  }
  CHECK(total_err / pairs <= 1.5 / std::sqrt(128.0));
}

TEST_CASE("lsh_near_duplicates validates banding") {
  LshParams params;
  params.bands = 10;  // 10*4 != 128
  CHECK_THROWS_AS(lsh_near_duplicates({}, params), InvalidParams);
}

TEST_CASE("byte-identical docs are always reported as exact duplicates") {
  std::vector<TextDoc> docs = {
      {"a", "same exact text body", 0},
      {"b", "completely unrelated content here", 0},
      {"c", "same exact text body", 0},
  };
  const auto pairs = lsh_near_duplicates(docs);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].a == 0);
  CHECK(pairs[0].b == 2);
  CHECK(pairs[0].exact);
  CHECK(pairs[0].estimated_jaccard == doctest::Approx(1.0));
}

TEST_CASE("low-Jaccard pairs stay below a 0.8 threshold") {
  // Two docs sharing a token but about 0.05 exact Jaccard.
  testutil::TempDir scratch("lsh");
  rng::CounterRng gen(55);
  const std::string shared = testutil::random_letters(gen, 30);
  const std::string a = shared + testutil::random_letters(gen, 570);
  const std::string b = shared + testutil::random_letters(gen, 570);
  const double exact =
      oracles::exact_jaccard(shingle_set(a, 5), shingle_set(b, 5));
  REQUIRE(exact < 0.2);

  std::vector<TextDoc> docs = {{"a", a, 0}, {"b", b, 0}};
  CHECK(lsh_near_duplicates(docs).empty());
}

TEST_CASE("planted near-duplicates: recall and precision vs the oracle") {
  const auto docs = testutil::near_dup_corpus(100, 42);
  REQUIRE(docs.size() == 200);

  // Brute-force oracle: every pair with exact shingle Jaccard >= 0.8.
  std::vector<std::vector<std::uint64_t>> shingles;
  shingles.reserve(docs.size());
  for (const TextDoc& doc : docs) shingles.push_back(shingle_set(doc.text, 5));
  std::set<std::pair<std::size_t, std::size_t>> oracle_pairs;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = i + 1; j < docs.size(); ++j) {
      if (oracles::exact_jaccard(shingles[i], shingles[j]) >= 0.8) {
        oracle_pairs.insert({i, j});
      }
    }
  }
  // The construction plants one high-Jaccard pair per base doc.
  REQUIRE(oracle_pairs.size() >= 95);

  std::set<std::pair<std::size_t, std::size_t>> reported;
  for (const DupPair& pair : lsh_near_duplicates(docs)) {
    reported.insert({pair.a, pair.b});
  }

  std::size_t hit = 0;
  for (const auto& pair : reported) {
    if (oracle_pairs.count(pair) > 0) ++hit;
  }
  const double recall =
      static_cast<double>(hit) / static_cast<double>(oracle_pairs.size());
  const double precision =
      reported.empty() ? 0.0
                       : static_cast<double>(hit) /
                             static_cast<double>(reported.size());
  CHECK(recall >= 0.95);
  CHECK(precision >= 0.90);
}
