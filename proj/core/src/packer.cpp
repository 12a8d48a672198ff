#include "mmpipe/packer.hpp"

#include <algorithm>

#include "mmpipe/errors.hpp"

namespace mmpipe::packer {

TokenStream lay_out_document(const corpus::InterleavedDoc& doc,
                             int tokens_per_image, Vocabulary& vocab) {
  if (tokens_per_image <= 0) {
    throw InvalidParams("tokens_per_image must be positive");
  }
  TokenStream stream;
  stream.boundaries = {0};
  for (const corpus::DocSegment& seg : doc.segments) {
    if (const auto* text = std::get_if<corpus::TextSegment>(&seg)) {
      for (const int id : tokenize(text->content, vocab)) {
        stream.tokens.push_back(id);
      }
    } else {
      const auto span = static_cast<std::size_t>(tokens_per_image);
      stream.image_slots.push_back({stream.tokens.size(), span});
      stream.tokens.insert(stream.tokens.end(), span, Vocabulary::kImageId);
    }
  }
  return stream;
}

struct SequencePacker::Piece {
  const TokenStream* doc = nullptr;
  std::size_t begin = 0;  // token range [begin, end) within *doc
  std::size_t end = 0;
  std::size_t slot_begin = 0;  // slot index range within doc->image_slots
  std::size_t slot_end = 0;

  std::size_t tokens() const { return end - begin; }
  std::size_t images() const { return slot_end - slot_begin; }
};

SequencePacker::SequencePacker(const BatchPlan& plan) : plan_(plan) {
  if (plan.seq_len <= 0 || plan.max_images_per_seq < 0 ||
      plan.tokens_per_image <= 0 || plan.batch_size <= 0) {
    throw InvalidParams("batch plan fields must be positive");
  }
  if (plan.tokens_per_image > plan.seq_len) {
    throw OversizedSlot("tokens_per_image exceeds seq_len");
  }
}

std::vector<PackedSequence> SequencePacker::push(const TokenStream& doc) {
  const auto seq_len = static_cast<std::size_t>(plan_.seq_len);
  const auto max_images = static_cast<std::size_t>(plan_.max_images_per_seq);

  for (const ImageSlot& slot : doc.image_slots) {
    if (slot.span > seq_len) {
      throw OversizedSlot("image slot wider than seq_len");
    }
  }

  // Cut the document into pieces that each fit an empty sequence, advancing
  // over whole slots (a cut never lands inside one).
  std::vector<Piece> pieces;
  std::size_t pos = 0;
  std::size_t slot = 0;
  while (pos < doc.tokens.size()) {
    Piece piece;
    piece.doc = &doc;
    piece.begin = pos;
    piece.slot_begin = slot;
    piece.slot_end = slot;
    while (pos < doc.tokens.size()) {
      const std::size_t used = pos - piece.begin;
      if (slot < doc.image_slots.size() &&
          doc.image_slots[slot].position == pos) {
        const std::size_t span = doc.image_slots[slot].span;
        if (used + span > seq_len || piece.images() + 1 > max_images) break;
        pos += span;
        ++slot;
        piece.slot_end = slot;
        continue;
      }
      const std::size_t next_stop = slot < doc.image_slots.size()
                                        ? doc.image_slots[slot].position
                                        : doc.tokens.size();
      const std::size_t take = std::min(next_stop - pos, seq_len - used);
      if (take == 0) break;
      pos += take;
    }
    piece.end = pos;
    piece.slot_end = slot;
    if (piece.tokens() == 0) {
      throw InvalidPlan("image slot cannot fit the per-sequence image budget");
    }
    pieces.push_back(piece);
  }

  std::vector<PackedSequence> out;
  for (const Piece& piece : pieces) {
    const bool fits = open_ &&
                      current_.tokens.size() + piece.tokens() <= seq_len &&
                      current_images_ + piece.images() <= max_images;
    if (open_ && !fits) {
      out.push_back(seal());
    }
    append_piece(piece);
    // Image-full sequences stay open: a later text-only document still fits.
    if (current_.tokens.size() == seq_len) {
      out.push_back(seal());
    }
  }
  return out;
}

void SequencePacker::append_piece(const Piece& piece) {
  const std::size_t offset = current_.tokens.size();
  current_.boundaries.push_back(offset);
  current_.tokens.insert(current_.tokens.end(),
                         piece.doc->tokens.begin() +
                             static_cast<std::ptrdiff_t>(piece.begin),
                         piece.doc->tokens.begin() +
                             static_cast<std::ptrdiff_t>(piece.end));
  for (std::size_t s = piece.slot_begin; s < piece.slot_end; ++s) {
    const ImageSlot& src = piece.doc->image_slots[s];
    current_.image_slots.push_back(
        {src.position - piece.begin + offset, src.span});
  }
  current_images_ += piece.images();
  open_ = true;
}

PackedSequence SequencePacker::seal() {
  const auto seq_len = static_cast<std::size_t>(plan_.seq_len);
  PackedSequence seq;
  seq.seq_len = plan_.seq_len;
  seq.pad_from = current_.tokens.size();
  seq.stream = std::move(current_);
  seq.stream.tokens.resize(seq_len, Vocabulary::kPadId);

  seq.loss_mask.assign(seq_len, true);
  for (std::size_t p = seq.pad_from; p < seq_len; ++p) {
    seq.loss_mask[p] = false;
  }
  for (const ImageSlot& slot : seq.stream.image_slots) {
    for (std::size_t p = slot.position; p < slot.position + slot.span; ++p) {
      seq.loss_mask[p] = false;
    }
  }

  current_ = TokenStream{};
  current_images_ = 0;
  open_ = false;
  return seq;
}

std::optional<PackedSequence> SequencePacker::finish() {
  if (!open_) return std::nullopt;
  return seal();
}

std::vector<PackedSequence> pack_sequences(std::span<const TokenStream> docs,
                                           const BatchPlan& plan) {
  SequencePacker packer(plan);
  std::vector<PackedSequence> out;
  for (const TokenStream& doc : docs) {
    for (PackedSequence& seq : packer.push(doc)) {
      out.push_back(std::move(seq));
    }
  }
  if (auto tail = packer.finish()) {
    out.push_back(std::move(*tail));
  }
  return out;
}

MaskSpec mask_spec_for(const PackedSequence& seq) {
  return {seq.stream.boundaries, static_cast<std::size_t>(seq.seq_len),
          seq.pad_from};
}

BlockCausalMask::BlockCausalMask(MaskSpec spec) : spec_(std::move(spec)) {
  if (spec_.pad_from > spec_.seq_len) {
    throw InvalidParams("pad_from exceeds seq_len");
  }
  if (spec_.pad_from > 0) {
    if (spec_.boundaries.empty() || spec_.boundaries.front() != 0) {
      throw InvalidParams("boundaries must start at 0");
    }
    for (std::size_t i = 1; i < spec_.boundaries.size(); ++i) {
      if (spec_.boundaries[i] <= spec_.boundaries[i - 1] ||
          spec_.boundaries[i] >= spec_.pad_from) {
        throw InvalidParams("boundaries must be strictly increasing and "
                            "precede padding");
      }
    }
  }
}

std::size_t BlockCausalMask::block_of(std::size_t pos) const {
  if (pos >= spec_.pad_from) {
    // Padding: one singleton block per position.
    return spec_.boundaries.size() + (pos - spec_.pad_from);
  }
  const auto it = std::upper_bound(spec_.boundaries.begin(),
                                   spec_.boundaries.end(), pos);
  return static_cast<std::size_t>(it - spec_.boundaries.begin()) - 1;
}

bool BlockCausalMask::attend(std::size_t i, std::size_t j) const {
  if (i >= spec_.seq_len || j >= spec_.seq_len) return false;
  return j <= i && block_of(i) == block_of(j);
}

std::vector<std::vector<bool>> BlockCausalMask::dense() const {
  std::vector<std::vector<bool>> m(spec_.seq_len,
                                   std::vector<bool>(spec_.seq_len, false));
  for (std::size_t i = 0; i < spec_.seq_len; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      m[i][j] = attend(i, j);
    }
  }
  return m;
}

BlockCausalMask build_mask(MaskSpec spec) {
  return BlockCausalMask(std::move(spec));
}

TokenAccounting batch_token_accounting(const BatchPlan& plan) {
  if (plan.batch_size <= 0 || plan.seq_len <= 0 ||
      plan.max_images_per_seq < 0 || plan.tokens_per_image <= 0) {
    throw InvalidPlan("plan fields must be positive");
  }
  const std::int64_t per_seq_images = static_cast<std::int64_t>(
      plan.max_images_per_seq) * plan.tokens_per_image;
  if (per_seq_images > plan.seq_len) {
    throw InvalidPlan("max image tokens per sequence exceed seq_len");
  }
  TokenAccounting acc;
  acc.total_positions =
      static_cast<std::int64_t>(plan.batch_size) * plan.seq_len;
  acc.max_image_tokens =
      static_cast<std::int64_t>(plan.batch_size) * per_seq_images;
  acc.min_text_positions = acc.total_positions - acc.max_image_tokens;
  return acc;
}

}  // namespace mmpipe::packer
