#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

// Reference tokenizer: deterministic word/punctuation splitting with a
// stable first-seen vocabulary. Token ids depend only on the order in which
// token strings are first encountered, so a fixed corpus order yields a
// fixed vocabulary. The round trip detokenize(tokenize(t)) preserves the
// non-whitespace character sequence of t exactly; only whitespace is
// normalized.

namespace mmpipe::packer {

class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kImageId = 1;

  Vocabulary();

  /// Id for a token string, inserting it on first sight.
  int id_for(std::string_view token);

  /// Lookup without insertion.
  std::optional<int> find(std::string_view token) const;

  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  void write(std::ostream& out) const;  // one token per line, in id order

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Splits into word runs ([A-Za-z0-9_] and bytes >= 0x80) and single
/// punctuation characters; whitespace separates but is never a token.
std::vector<std::string> split_tokens(std::string_view text);

std::vector<int> tokenize(std::string_view text, Vocabulary& vocab);

/// Joins tokens with single spaces, omitting the space before common closing
/// punctuation. Unknown ids are rejected.
std::string detokenize(std::span<const int> ids, const Vocabulary& vocab);

}  // namespace mmpipe::packer
