#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mmpipe/errors.hpp"

// Interleaved image-text corpus construction: page parsing, image and
// document filtering, and the two-pass duplicate-image removal.
//
// All operations are pure. The intended pipeline is:
//   parse_page -> attach image metadata -> filter_image (drop rejects)
//   -> filter_document -> count_images over all kept docs (pass 1)
//   -> apply_image_dedup + filter_document re-check (pass 2).

namespace mmpipe::corpus {

struct RawPage {
  std::string page_id;
  std::string markup;  // HTML-subset source; may be empty
  std::string url;
};

struct ImageRecord {
  std::string url;
  int width_px = 0;
  int height_px = 0;
  std::string md5_hex;      // 32 lowercase hex chars once metadata is attached
  bool bytes_valid = false;  // header/bytes parsed OK

  bool operator==(const ImageRecord&) const = default;
};

struct TextSegment {
  std::string content;  // non-empty, whitespace-normalized
  bool operator==(const TextSegment&) const = default;
};

struct ImageSegment {
  ImageRecord image;
  bool operator==(const ImageSegment&) const = default;
};

using DocSegment = std::variant<TextSegment, ImageSegment>;

struct InterleavedDoc {
  std::string doc_id;
  std::vector<DocSegment> segments;

  std::size_t image_count() const;
};

struct TextDoc {
  std::string doc_id;
  std::string text;
  std::size_t token_estimate = 0;  // whitespace-split count
};

enum class RejectReason {
  ok,
  corrupt_bytes,
  aspect_ratio,
  too_small,
  too_large,
  url_keyword,
  too_short,
  blocklist,
  no_images,
  too_many_images,
  global_dup,
  page_dup,
};

std::string_view reject_reason_name(RejectReason reason);

struct FilterDecision {
  bool keep = true;
  RejectReason reason = RejectReason::ok;  // ok iff keep
};

// ---------------------------------------------------------------------------
// Page parsing
// ---------------------------------------------------------------------------

// Supported HTML subset: nestable block/inline elements, void elements
// (img/br/hr), raw-text elements (script/style, stripped), comments and
// doctype declarations (skipped). Tag boundaries count as whitespace; text
// runs are whitespace-normalized (runs collapsed to one space, ends trimmed).
// Unclosed tags at EOF are auto-closed; a mismatched close tag throws
// MalformedMarkup. Image segments carry only the src URL until metadata is
// attached.
std::vector<DocSegment> parse_page(const RawPage& page);

/// Re-serializes segments into the markup subset (text runs and <img> tags).
/// parse_page(serialize_segments(segs)) == segs for any parse_page output.
std::string serialize_segments(std::span<const DocSegment> segments);

/// Collapses whitespace runs to single spaces and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Whitespace-split token count, used for length filtering.
std::size_t estimate_tokens(std::string_view text);

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

struct ImageFilterConfig {
  // Reject when width > 2*height or 2*width < height (exact integer checks;
  // ratios of exactly 1/2 and 2 are kept).
  int min_side_px = 100;    // reject when min(w,h) <  min_side_px
  int max_side_px = 10000;  // reject when max(w,h) >  max_side_px
  std::vector<std::string> url_keywords = {"logo", "button", "icon", "plugin",
                                           "widget"};
};

/// Total function; the first matching reason in the fixed order
/// [corrupt_bytes, aspect_ratio, too_small, too_large, url_keyword] wins.
FilterDecision filter_image(const ImageRecord& img,
                            const ImageFilterConfig& cfg = {});

/// Rejects docs with zero images (no_images) or more than max_images
/// (too_many_images). The bound itself is kept.
FilterDecision filter_document(const InterleavedDoc& doc, int max_images = 30);

struct TextFilterConfig {
  std::size_t min_tokens = 64;
  std::vector<std::string> blocklist;  // case-insensitive whole-word terms
};

FilterDecision text_quality_filter(const TextDoc& doc,
                                   const TextFilterConfig& cfg);

// ---------------------------------------------------------------------------
// Image de-duplication (two-pass)
// ---------------------------------------------------------------------------

/// Per-corpus occurrence counts keyed by image URL and MD5. Mergeable across
/// shards: merge(a, b) is a pointwise sum, and sharded counting equals
/// single-pass counting.
struct DedupCounts {
  std::map<std::string, std::uint64_t> url_counts;
  std::map<std::string, std::uint64_t> md5_counts;

  void add(const InterleavedDoc& doc);
  void merge(const DedupCounts& other);
};

DedupCounts count_images(std::span<const InterleavedDoc> docs);

struct DedupStats {
  std::size_t removed_global = 0;
  std::size_t removed_page = 0;
};

/// Removes images whose corpus count exceeds max_count (strictly) by URL or
/// MD5, then repeats of a URL/MD5 already seen earlier in the same document.
/// Surviving segment order is preserved; adjacent text segments left by a
/// removal are merged with a single space.
InterleavedDoc apply_image_dedup(const InterleavedDoc& doc,
                                 const DedupCounts& counts,
                                 std::uint64_t max_count = 10,
                                 DedupStats* stats = nullptr);

}  // namespace mmpipe::corpus
