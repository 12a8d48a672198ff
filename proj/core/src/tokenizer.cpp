#include "mmpipe/tokenizer.hpp"

#include <cctype>
#include <ostream>

#include "mmpipe/errors.hpp"

namespace mmpipe::packer {

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

bool no_space_before(const std::string& token) {
  if (token.size() != 1) return false;
  switch (token[0]) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case ')': case ']': case '}': case '%': case '\'':
      return true;
    default:
      return false;
  }
}

bool no_space_after(const std::string& token) {
  if (token.size() != 1) return false;
  switch (token[0]) {
    case '(': case '[': case '{': case '$': case '#':
      return true;
    default:
      return false;
  }
}

}  // namespace

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<image>"};
  ids_ = {{"<pad>", kPadId}, {"<image>", kImageId}};
}

int Vocabulary::id_for(std::string_view token) {
  const auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InvalidParams("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::write(std::ostream& out) const {
  for (const std::string& t : tokens_) out << t << "\n";
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(text.substr(i, 1));
      ++i;
    }
  }
  return out;
}

std::vector<int> tokenize(std::string_view text, Vocabulary& vocab) {
  std::vector<int> ids;
  for (const std::string& token : split_tokens(text)) {
    ids.push_back(vocab.id_for(token));
  }
  return ids;
}

std::string detokenize(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  bool suppress_space = false;
  for (const int id : ids) {
    const std::string& token = vocab.token(id);
    if (!out.empty() && !suppress_space && !no_space_before(token)) {
      out.push_back(' ');
    }
    out += token;
    suppress_space = no_space_after(token);
  }
  return out;
}

}  // namespace mmpipe::packer
