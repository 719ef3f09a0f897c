#include "noisyst/vocab.hpp"

#include <sstream>

#include "noisyst/errors.hpp"

namespace noisyst {

const std::array<std::string, kNumReserved>& Vocabulary::reserved_tokens() {
  static const std::array<std::string, kNumReserved> reserved = {
      "<pad>", "<bos>", "<eos>", "<unk>", "<blank>", "<sep>"};
  return reserved;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) add(t);
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) add(t);
}

TokenId Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw UsageError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

Sequence Vocabulary::encode(const std::vector<std::string>& tokens) const {
  Sequence seq;
  seq.reserve(tokens.size());
  for (const auto& t : tokens) seq.push_back(id(t));
  return seq;
}

std::string Vocabulary::decode(const Sequence& seq) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out << ' ';
    out << token(seq[i]);
  }
  return out.str();
}

void validate_sequence(const Sequence& seq, std::size_t vocab_size) {
  if (seq.empty()) throw UsageError("empty sequence");
  for (TokenId t : seq) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
      throw UsageError("token id " + std::to_string(t) +
                       " outside vocabulary of size " +
                       std::to_string(vocab_size));
    }
    if (t == kPad || t == kBos || t == kEos) {
      throw UsageError("control token inside sequence");
    }
  }
}

}  // namespace noisyst
