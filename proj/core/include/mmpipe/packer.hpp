#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mmpipe/corpus.hpp"
#include "mmpipe/tokenizer.hpp"

// Sequence packing: lays out interleaved documents as token streams with
// image slots, packs them greedily into fixed-length sequences, and derives
// the block-causal attention mask that stops attention across packed example
// boundaries.

namespace mmpipe::packer {

struct ImageSlot {
  std::size_t position = 0;  // start offset within the stream/sequence
  std::size_t span = 0;      // tokens_per_image

  bool operator==(const ImageSlot&) const = default;
};

struct TokenStream {
  std::vector<int> tokens;
  std::vector<ImageSlot> image_slots;      // disjoint, within [0, len)
  std::vector<std::size_t> boundaries;     // example starts; begins with 0
};

struct BatchPlan {
  int batch_size = 512;
  int seq_len = 4096;
  int max_images_per_seq = 16;
  int tokens_per_image = 144;
};

struct PackedSequence {
  int seq_len = 0;
  TokenStream stream;           // tokens.size() == seq_len, pad-filled
  std::vector<bool> loss_mask;  // false over image slots and padding
  std::size_t pad_from = 0;     // first padding position (== seq_len if none)
};

/// Emits text tokens in order and a contiguous placeholder slot of
/// tokens_per_image ids per image segment.
TokenStream lay_out_document(const corpus::InterleavedDoc& doc,
                             int tokens_per_image, Vocabulary& vocab);

/// Greedy first-fit packer preserving input order. A document opens a new
/// sequence when it would overflow the remaining token or image budget;
/// documents that cannot fit an empty sequence are split at token boundaries,
/// never inside an image slot. Streaming: push() may emit zero or more
/// completed sequences; finish() flushes the tail.
class SequencePacker {
 public:
  explicit SequencePacker(const BatchPlan& plan);

  std::vector<PackedSequence> push(const TokenStream& doc);
  std::optional<PackedSequence> finish();

 private:
  struct Piece;  // contiguous doc fragment that fits an empty sequence

  void append_piece(const Piece& piece);
  PackedSequence seal();

  BatchPlan plan_;
  TokenStream current_;
  std::size_t current_images_ = 0;
  bool open_ = false;
};

std::vector<PackedSequence> pack_sequences(std::span<const TokenStream> docs,
                                           const BatchPlan& plan);

struct MaskSpec {
  std::vector<std::size_t> boundaries;  // strictly increasing, starts at 0
  std::size_t seq_len = 0;
  std::size_t pad_from = 0;  // positions >= pad_from attend only to themselves
};

MaskSpec mask_spec_for(const PackedSequence& seq);

/// attend(i, j) = j <= i and block(i) == block(j); padding positions attend
/// only to themselves.
class BlockCausalMask {
 public:
  explicit BlockCausalMask(MaskSpec spec);

  bool attend(std::size_t i, std::size_t j) const;
  std::size_t block_of(std::size_t pos) const;  // boundary interval index
  std::size_t seq_len() const { return spec_.seq_len; }

  /// Dense row-major seq_len x seq_len matrix; intended for small seq_len.
  std::vector<std::vector<bool>> dense() const;

 private:
  MaskSpec spec_;
};

BlockCausalMask build_mask(MaskSpec spec);

struct TokenAccounting {
  std::int64_t total_positions = 0;
  std::int64_t max_image_tokens = 0;
  std::int64_t min_text_positions = 0;
};

/// Throws InvalidPlan when max_images_per_seq * tokens_per_image > seq_len.
TokenAccounting batch_token_accounting(const BatchPlan& plan);

}  // namespace mmpipe::packer
