#include "mmpipe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mmpipe::corpus {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool is_void_tag(std::string_view tag) {
  return tag == "img" || tag == "br" || tag == "hr";
}

bool is_raw_text_tag(std::string_view tag) {
  return tag == "script" || tag == "style";
}

// Single-pass tokenizing parser over the markup subset. Text accumulates in
// a buffer that is flushed (whitespace-normalized) whenever an image segment
// is emitted or the document ends. Every tag boundary acts as whitespace.
class PageParser {
 public:
  explicit PageParser(const RawPage& page) : page_(page), src_(page.markup) {}

  std::vector<DocSegment> run() {
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<') {
        parse_tag();
      } else {
        text_.push_back(src_[pos_]);
        ++pos_;
      }
    }
    // Open tags at EOF are tolerated and auto-closed.
    flush_text();
    return std::move(segments_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw MalformedMarkup("page '" + page_.page_id + "': " + what);
  }

  void flush_text() {
    std::string normalized = normalize_whitespace(text_);
    text_.clear();
    if (!normalized.empty()) {
      segments_.push_back(TextSegment{std::move(normalized)});
    }
  }

  bool starts_with(std::string_view prefix) const {
    return src_.compare(pos_, prefix.size(), prefix) == 0;
  }

  void parse_tag() {
    if (starts_with("<!--")) {
      skip_comment();
      text_.push_back(' ');
      return;
    }
    if (starts_with("<!")) {  // doctype and friends
      skip_until('>');
      text_.push_back(' ');
      return;
    }
    if (starts_with("</")) {
      parse_close_tag();
      text_.push_back(' ');
      return;
    }
    parse_open_tag();
  }

  void skip_comment() {
    const auto end = src_.find("-->", pos_ + 4);
    pos_ = (end == std::string::npos) ? src_.size() : end + 3;
  }

  void skip_until(char c) {
    const auto end = src_.find(c, pos_);
    pos_ = (end == std::string::npos) ? src_.size() : end + 1;
  }

  std::string read_tag_name() {
    std::string name;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '-' || src_[pos_] == '_')) {
      name.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(src_[pos_]))));
      ++pos_;
    }
    return name;
  }

  void skip_spaces() {
    while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
  }

  void parse_close_tag() {
    pos_ += 2;  // "</"
    const std::string name = read_tag_name();
    if (name.empty()) fail("empty close tag");
    skip_spaces();
    if (pos_ >= src_.size() || src_[pos_] != '>') {
      fail("unterminated close tag </" + name);
    }
    ++pos_;
    if (open_.empty() || open_.back() != name) {
      fail("mismatched close tag </" + name + ">");
    }
    open_.pop_back();
  }

  // Attribute grammar: name, name=bare, name="quoted", name='quoted'.
  std::pair<std::string, std::string> read_attribute() {
    std::string name;
    while (pos_ < src_.size() && src_[pos_] != '=' && src_[pos_] != '>' &&
           src_[pos_] != '/' && !is_space(src_[pos_])) {
      name.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(src_[pos_]))));
      ++pos_;
    }
    skip_spaces();
    std::string value;
    if (pos_ < src_.size() && src_[pos_] == '=') {
      ++pos_;
      skip_spaces();
      if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
        const char quote = src_[pos_++];
        const auto end = src_.find(quote, pos_);
        if (end == std::string::npos) fail("unterminated attribute value");
        value = src_.substr(pos_, end - pos_);
        pos_ = end + 1;
      } else {
        while (pos_ < src_.size() && !is_space(src_[pos_]) &&
               src_[pos_] != '>' && src_[pos_] != '/') {
          value.push_back(src_[pos_++]);
        }
      }
    }
    return {std::move(name), std::move(value)};
  }

  void parse_open_tag() {
    ++pos_;  // '<'
    const std::string name = read_tag_name();
    if (name.empty()) fail("stray '<' or invalid tag name");

    std::string src_attr;
    bool self_closed = false;
    while (true) {
      skip_spaces();
      if (pos_ >= src_.size()) fail("unterminated tag <" + name);
      if (src_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (src_[pos_] == '/') {
        ++pos_;
        skip_spaces();
        if (pos_ >= src_.size() || src_[pos_] != '>') {
          fail("malformed self-closing tag <" + name);
        }
        ++pos_;
        self_closed = true;
        break;
      }
      auto [attr, value] = read_attribute();
      if (attr.empty()) fail("malformed attribute in <" + name);
      if (attr == "src") src_attr = std::move(value);
    }

    if (name == "img") {
      flush_text();
      ImageRecord placeholder;
      placeholder.url = std::move(src_attr);
      segments_.push_back(ImageSegment{std::move(placeholder)});
      text_.push_back(' ');
      return;
    }
    text_.push_back(' ');
    if (is_void_tag(name) || self_closed) return;
    if (is_raw_text_tag(name)) {
      skip_raw_text(name);
      return;
    }
    open_.push_back(name);
  }

  // Content of script/style is dropped without tokenizing it.
  void skip_raw_text(const std::string& name) {
    const std::string close = "</" + name;
    const auto lowered = to_lower(src_.substr(pos_));
    const auto rel = lowered.find(close);
    if (rel == std::string::npos) {
      pos_ = src_.size();  // unclosed at EOF: tolerated
      return;
    }
    pos_ += rel + close.size();
    skip_spaces();
    if (pos_ >= src_.size() || src_[pos_] != '>') {
      fail("unterminated close tag " + close);
    }
    ++pos_;
  }

  const RawPage& page_;
  const std::string& src_;
  std::size_t pos_ = 0;
  std::string text_;
  std::vector<std::string> open_;
  std::vector<DocSegment> segments_;
};

bool md5_matches(const std::string& a, const std::string& b) {
  return !a.empty() && a == b;
}

}  // namespace

std::size_t InterleavedDoc::image_count() const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [](const DocSegment& s) {
        return std::holds_alternative<ImageSegment>(s);
      }));
}

std::string_view reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::ok: return "ok";
    case RejectReason::corrupt_bytes: return "corrupt_bytes";
    case RejectReason::aspect_ratio: return "aspect_ratio";
    case RejectReason::too_small: return "too_small";
    case RejectReason::too_large: return "too_large";
    case RejectReason::url_keyword: return "url_keyword";
    case RejectReason::too_short: return "too_short";
    case RejectReason::blocklist: return "blocklist";
    case RejectReason::no_images: return "no_images";
    case RejectReason::too_many_images: return "too_many_images";
    case RejectReason::global_dup: return "global_dup";
    case RejectReason::page_dup: return "page_dup";
  }
  return "unknown";
}

std::vector<DocSegment> parse_page(const RawPage& page) {
  return PageParser(page).run();
}

std::string serialize_segments(std::span<const DocSegment> segments) {
  std::string out;
  for (const DocSegment& seg : segments) {
    if (!out.empty()) out.push_back(' ');
    if (const auto* text = std::get_if<TextSegment>(&seg)) {
      out += text->content;
    } else {
      out += "<img src=\"" + std::get<ImageSegment>(seg).image.url + "\">";
    }
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (const char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

FilterDecision filter_image(const ImageRecord& img,
                            const ImageFilterConfig& cfg) {
  if (!img.bytes_valid) {
    return {false, RejectReason::corrupt_bytes};
  }
  const std::int64_t w = img.width_px;
  const std::int64_t h = img.height_px;
  //  w/h > 2  <=>  w > 2h;  w/h < 1/2  <=>  2w < h  (both bounds inclusive-keep)
  if (w > 2 * h || 2 * w < h) {
    return {false, RejectReason::aspect_ratio};
  }
  if (std::min(w, h) < cfg.min_side_px) {
    return {false, RejectReason::too_small};
  }
  if (std::max(w, h) > cfg.max_side_px) {
    return {false, RejectReason::too_large};
  }
  const std::string url = to_lower(img.url);
  for (const std::string& keyword : cfg.url_keywords) {
    if (url.find(to_lower(keyword)) != std::string::npos) {
      return {false, RejectReason::url_keyword};
    }
  }
  return {true, RejectReason::ok};
}

FilterDecision filter_document(const InterleavedDoc& doc, int max_images) {
  const std::size_t n = doc.image_count();
  if (n == 0) return {false, RejectReason::no_images};
  if (n > static_cast<std::size_t>(max_images)) {
    return {false, RejectReason::too_many_images};
  }
  return {true, RejectReason::ok};
}

FilterDecision text_quality_filter(const TextDoc& doc,
                                   const TextFilterConfig& cfg) {
  if (doc.token_estimate < cfg.min_tokens) {
    return {false, RejectReason::too_short};
  }
  if (!cfg.blocklist.empty()) {
    // Case-insensitive whole-word match: word boundaries are non-alphanumeric.
    const std::string text = to_lower(doc.text);
    for (const std::string& term : cfg.blocklist) {
      const std::string needle = to_lower(term);
      if (needle.empty()) continue;
      std::size_t pos = 0;
      while ((pos = text.find(needle, pos)) != std::string::npos) {
        const bool left_ok =
            pos == 0 ||
            !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
        const std::size_t end = pos + needle.size();
        const bool right_ok =
            end >= text.size() ||
            !std::isalnum(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) {
          return {false, RejectReason::blocklist};
        }
        ++pos;
      }
    }
  }
  return {true, RejectReason::ok};
}

void DedupCounts::add(const InterleavedDoc& doc) {
  for (const DocSegment& seg : doc.segments) {
    if (const auto* img = std::get_if<ImageSegment>(&seg)) {
      if (!img->image.url.empty()) ++url_counts[img->image.url];
      if (!img->image.md5_hex.empty()) ++md5_counts[img->image.md5_hex];
    }
  }
}

void DedupCounts::merge(const DedupCounts& other) {
  for (const auto& [url, n] : other.url_counts) url_counts[url] += n;
  for (const auto& [md5, n] : other.md5_counts) md5_counts[md5] += n;
}

DedupCounts count_images(std::span<const InterleavedDoc> docs) {
  DedupCounts counts;
  for (const InterleavedDoc& doc : docs) counts.add(doc);
  return counts;
}

InterleavedDoc apply_image_dedup(const InterleavedDoc& doc,
                                 const DedupCounts& counts,
                                 std::uint64_t max_count, DedupStats* stats) {
  const auto count_of = [](const std::map<std::string, std::uint64_t>& m,
                           const std::string& key) -> std::uint64_t {
    if (key.empty()) return 0;
    const auto it = m.find(key);
    return it == m.end() ? 0 : it->second;
  };

  InterleavedDoc out;
  out.doc_id = doc.doc_id;
  std::vector<std::string> seen_urls;
  std::vector<std::string> seen_md5s;

  for (const DocSegment& seg : doc.segments) {
    const auto* img = std::get_if<ImageSegment>(&seg);
    if (img == nullptr) {
      // Merge adjacent text segments created by image removal.
      const auto& text = std::get<TextSegment>(seg).content;
      if (!out.segments.empty() &&
          std::holds_alternative<TextSegment>(out.segments.back())) {
        auto& prev = std::get<TextSegment>(out.segments.back());
        prev.content += " " + text;
      } else {
        out.segments.push_back(seg);
      }
      continue;
    }

    const ImageRecord& rec = img->image;
    if (count_of(counts.url_counts, rec.url) > max_count ||
        count_of(counts.md5_counts, rec.md5_hex) > max_count) {
      if (stats) ++stats->removed_global;
      continue;
    }
    const bool url_repeat =
        !rec.url.empty() &&
        std::find(seen_urls.begin(), seen_urls.end(), rec.url) !=
            seen_urls.end();
    const bool md5_repeat =
        std::any_of(seen_md5s.begin(), seen_md5s.end(),
                    [&](const std::string& m) { return md5_matches(m, rec.md5_hex); });
    if (url_repeat || md5_repeat) {
      if (stats) ++stats->removed_page;
      continue;
    }
    if (!rec.url.empty()) seen_urls.push_back(rec.url);
    if (!rec.md5_hex.empty()) seen_md5s.push_back(rec.md5_hex);
    out.segments.push_back(seg);
  }
  return out;
}

}  // namespace mmpipe::corpus
