#include <doctest.h>

#include <numeric>

#include "mmpipe/detrng.hpp"
#include "mmpipe/errors.hpp"
#include "mmpipe/packer.hpp"
#include "mmpipe/serde.hpp"

using namespace mmpipe;
using namespace mmpipe::packer;

namespace {

corpus::InterleavedDoc doc_of(std::initializer_list<corpus::DocSegment> segs) {
  corpus::InterleavedDoc doc;
  doc.doc_id = "d";
  doc.segments = segs;
  return doc;
}

corpus::ImageSegment image_seg() {
  corpus::ImageRecord rec;
  rec.url = "u";
  rec.bytes_valid = true;
  return corpus::ImageSegment{rec};
}

// Synthetic stream: `text` ids followed by slots, via explicit construction.
TokenStream stream_of_lengths(const std::vector<int>& text_runs,
                              int tokens_per_image) {
  TokenStream s;
  s.boundaries = {0};
  int next_id = 2;
  for (std::size_t i = 0; i < text_runs.size(); ++i) {
    for (int t = 0; t < text_runs[i]; ++t) {
      s.tokens.push_back(next_id++ % 97 + 2);
    }
    if (i + 1 < text_runs.size()) {
      s.image_slots.push_back(
          {s.tokens.size(), static_cast<std::size_t>(tokens_per_image)});
      s.tokens.insert(s.tokens.end(),
                      static_cast<std::size_t>(tokens_per_image),
                      Vocabulary::kImageId);
    }
  }
  return s;
}

TokenStream text_stream(int len) { return stream_of_lengths({len}, 0); }

std::size_t nonpad_count(const PackedSequence& seq) { return seq.pad_from; }

}  // namespace

TEST_CASE("tokenize basics") {
  Vocabulary vocab;
  CHECK(tokenize("", vocab).empty());
  const auto a = tokenize("hello world", vocab);
  const auto b = tokenize("hello world", vocab);
  CHECK(a == b);
  CHECK(tokenize("a b", vocab) == tokenize("a  b", vocab));
  // Punctuation splits off as single-character tokens.
  const auto c = tokenize("hello, world!", vocab);
  CHECK(c.size() == 4);
}

TEST_CASE("detokenize preserves the non-whitespace character sequence") {
  const auto strip_ws = [](const std::string& s) {
    std::string out;
    for (const char c : s) {
      if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
  };
  Vocabulary vocab;
  for (const std::string text :
       {"hello, world!", "a  b   c", "(x) [y] {z}", "don't 3.5%"}) {
    const std::string round = detokenize(tokenize(text, vocab), vocab);
    CHECK(strip_ws(round) == strip_ws(text));
  }
}

TEST_CASE("lay_out_document places image slots at segment positions") {
  Vocabulary vocab;
  const auto doc = doc_of({corpus::TextSegment{"one two three four five"},
                           image_seg(), corpus::TextSegment{"six seven"}});
  const TokenStream stream = lay_out_document(doc, 144, vocab);
  CHECK(stream.tokens.size() == 151);
  REQUIRE(stream.image_slots.size() == 1);
  CHECK(stream.image_slots[0] == ImageSlot{5, 144});
  for (std::size_t p = 5; p < 149; ++p) {
    CHECK(stream.tokens[p] == Vocabulary::kImageId);
  }

  const TokenStream only_image =
      lay_out_document(doc_of({image_seg()}), 144, vocab);
  CHECK(only_image.tokens.size() == 144);
  CHECK(only_image.image_slots[0] == ImageSlot{0, 144});

  const TokenStream adjacent =
      lay_out_document(doc_of({image_seg(), image_seg()}), 144, vocab);
  REQUIRE(adjacent.image_slots.size() == 2);
  CHECK(adjacent.image_slots[0] == ImageSlot{0, 144});
  CHECK(adjacent.image_slots[1] == ImageSlot{144, 144});
}

TEST_CASE("greedy packing: two 2000-token docs share a 4096 sequence") {
  BatchPlan plan;
  plan.seq_len = 4096;
  std::vector<TokenStream> docs = {text_stream(2000), text_stream(2000),
                                   text_stream(2000)};
  const auto sequences = pack_sequences(docs, plan);
  REQUIRE(sequences.size() == 2);
  CHECK(sequences[0].stream.boundaries == std::vector<std::size_t>{0, 2000});
  CHECK(sequences[0].pad_from == 4000);
  CHECK(sequences[1].stream.boundaries == std::vector<std::size_t>{0});
  CHECK(sequences[1].pad_from == 2000);
}

TEST_CASE("image budget: the 17th single-image caption starts a new sequence") {
  BatchPlan plan;  // 4096 / 16 images / 144 tokens
  std::vector<TokenStream> docs;
  for (int i = 0; i < 17; ++i) {
    docs.push_back(stream_of_lengths({3, 2}, plan.tokens_per_image));
  }
  const auto sequences = pack_sequences(docs, plan);
  REQUIRE(sequences.size() == 2);
  CHECK(sequences[0].stream.image_slots.size() == 16);
  CHECK(sequences[1].stream.image_slots.size() == 1);
  CHECK(sequences[0].stream.boundaries.size() == 16);
}

TEST_CASE("oversized documents split at token granularity") {
  BatchPlan plan;
  plan.seq_len = 4096;
  std::vector<TokenStream> docs = {text_stream(5000)};
  const auto sequences = pack_sequences(docs, plan);
  REQUIRE(sequences.size() == 2);
  CHECK(sequences[0].stream.boundaries == std::vector<std::size_t>{0});
  CHECK(sequences[0].pad_from == 4096);
  CHECK(sequences[1].stream.boundaries == std::vector<std::size_t>{0});
  CHECK(sequences[1].pad_from == 904);
}

TEST_CASE("splits never land inside an image slot") {
  BatchPlan plan;
  plan.seq_len = 100;
  plan.tokens_per_image = 60;
  plan.max_images_per_seq = 2;
  // 50 text + 60-slot + 30 text: the slot cannot follow the text in a
  // 100-token sequence, so the cut lands before the slot.
  std::vector<TokenStream> docs = {stream_of_lengths({50, 30}, 60)};
  const auto sequences = pack_sequences(docs, plan);
  REQUIRE(sequences.size() == 2);
  CHECK(sequences[0].pad_from == 50);
  CHECK(sequences[0].stream.image_slots.empty());
  REQUIRE(sequences[1].stream.image_slots.size() == 1);
  CHECK(sequences[1].stream.image_slots[0] == ImageSlot{0, 60});
  CHECK(sequences[1].pad_from == 90);
}

TEST_CASE("tokens_per_image larger than seq_len is rejected") {
  BatchPlan plan;
  plan.seq_len = 100;
  plan.tokens_per_image = 101;
  CHECK_THROWS_AS(SequencePacker{plan}, OversizedSlot);
}

TEST_CASE("loss mask excludes image slots and padding") {
  BatchPlan plan;
  plan.seq_len = 300;
  plan.tokens_per_image = 64;
  std::vector<TokenStream> docs = {stream_of_lengths({10, 20}, 64)};
  const auto sequences = pack_sequences(docs, plan);
  REQUIRE(sequences.size() == 1);
  const PackedSequence& seq = sequences[0];
  CHECK(seq.pad_from == 94);
  for (std::size_t p = 0; p < 300; ++p) {
    const bool in_slot = p >= 10 && p < 74;
    const bool padded = p >= 94;
    CHECK(seq.loss_mask[p] == (!in_slot && !padded));
  }
}

TEST_CASE("block-causal mask: boundaries [0,3] with seq_len 5") {
  const BlockCausalMask mask = build_mask({{0, 3}, 5, 5});
  CHECK_FALSE(mask.attend(4, 2));  // cross-block
  CHECK(mask.attend(2, 1));        // same block, causal
  CHECK_FALSE(mask.attend(1, 2));  // anti-causal
  CHECK(mask.attend(0, 0));
  CHECK(mask.attend(4, 3));
  CHECK_FALSE(mask.attend(2, 3));
}

TEST_CASE("padding attends only to itself") {
  const BlockCausalMask mask = build_mask({{0}, 6, 3});
  for (std::size_t p = 3; p < 6; ++p) {
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(mask.attend(p, j) == (p == j));
    }
    CHECK_FALSE(mask.attend(2, p));
  }
}

TEST_CASE("batch token accounting matches the production plan") {
  const TokenAccounting acc = batch_token_accounting(BatchPlan{});
  CHECK(acc.total_positions == 2097152);
  CHECK(acc.max_image_tokens == 1179648);
  CHECK(acc.min_text_positions == 917504);

  BatchPlan tiny;
  tiny.batch_size = 1;
  const TokenAccounting one = batch_token_accounting(tiny);
  CHECK(one.max_image_tokens == 2304);
  CHECK(one.min_text_positions == 1792);

  BatchPlan bad;
  bad.max_images_per_seq = 28;
  bad.tokens_per_image = 150;  // 4200 > 4096
  CHECK_THROWS_AS(batch_token_accounting(bad), InvalidPlan);
}

// Randomized packing invariants, small scale; the acceptance suite runs the
// full 1000-stream version.
TEST_CASE("packing invariants on random streams") {
  rng::CounterRng gen(314);
  for (int trial = 0; trial < 100; ++trial) {
    BatchPlan plan;
    plan.seq_len = 32 + static_cast<int>(gen.next_below(225));
    plan.tokens_per_image =
        1 + static_cast<int>(gen.next_below(
                static_cast<std::uint64_t>(std::min(plan.seq_len, 48))));
    plan.max_images_per_seq = 1 + static_cast<int>(gen.next_below(8));

    std::vector<TokenStream> docs;
    const auto n_docs = 1 + gen.next_below(12);
    std::size_t total_tokens = 0;
    for (std::uint64_t d = 0; d < n_docs; ++d) {
      std::vector<int> runs;
      const auto n_runs = 1 + gen.next_below(5);
      for (std::uint64_t r = 0; r < n_runs; ++r) {
        runs.push_back(static_cast<int>(gen.next_below(60)));
      }
      docs.push_back(stream_of_lengths(runs, plan.tokens_per_image));
      total_tokens += docs.back().tokens.size();
    }

    const auto sequences = pack_sequences(docs, plan);

    // Conservation.
    std::size_t packed_tokens = 0;
    for (const PackedSequence& seq : sequences) {
      packed_tokens += nonpad_count(seq);
    }
    CHECK(packed_tokens == total_tokens);

    // Determinism under replay.
    const auto replay = pack_sequences(docs, plan);
    REQUIRE(replay.size() == sequences.size());
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      CHECK(serde::packed_sequence_line(replay[s]) ==
            serde::packed_sequence_line(sequences[s]));
    }

    for (const PackedSequence& seq : sequences) {
      CHECK(seq.stream.tokens.size() ==
            static_cast<std::size_t>(plan.seq_len));
      CHECK(seq.stream.image_slots.size() <=
            static_cast<std::size_t>(plan.max_images_per_seq));

      // Slot integrity: contiguous placeholder runs inside one block.
      const BlockCausalMask mask = build_mask(mask_spec_for(seq));
      for (const ImageSlot& slot : seq.stream.image_slots) {
        CHECK(slot.position + slot.span <= seq.pad_from);
        for (std::size_t p = slot.position; p < slot.position + slot.span;
             ++p) {
          CHECK(seq.stream.tokens[p] == Vocabulary::kImageId);
        }
        CHECK(mask.block_of(slot.position) ==
              mask.block_of(slot.position + slot.span - 1));
      }

      // Mask block-causality against an independent block reconstruction.
      std::vector<std::size_t> block(seq.pad_from, 0);
      for (std::size_t p = 0, b = 0; p < seq.pad_from; ++p) {
        if (b + 1 < seq.stream.boundaries.size() &&
            seq.stream.boundaries[b + 1] == p) {
          ++b;
        }
        block[p] = b;
      }
      std::size_t violations = 0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(plan.seq_len);
           ++i) {
        for (std::size_t j = 0; j < static_cast<std::size_t>(plan.seq_len);
             ++j) {
          const bool expected =
              i < seq.pad_from && j < seq.pad_from
                  ? (j <= i && block[i] == block[j])
                  : i == j && i >= seq.pad_from;
          if (mask.attend(i, j) != expected) ++violations;
        }
      }
      CHECK(violations == 0);
    }
  }
}
