#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace noisyst {

using TokenId = std::int32_t;

// Reserved ids are fixed for every vocabulary.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kBlank = 4;
inline constexpr TokenId kSep = 5;
inline constexpr std::size_t kNumReserved = 6;

// Token ids without PAD; BOS/EOS are added by the model, never stored.
using Sequence = std::vector<TokenId>;

struct ParallelExample {
  Sequence source;
  Sequence target;

  bool operator==(const ParallelExample&) const = default;
};

using Dataset = std::vector<ParallelExample>;

class Vocabulary {
 public:
  // Reserved tokens only.
  Vocabulary();
  // Reserved tokens followed by `tokens` in order; duplicates are ignored.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  static const std::array<std::string, kNumReserved>& reserved_tokens();

  // Returns the id of `token`, appending it if new.
  TokenId add(const std::string& token);
  // Unknown tokens map to kUnk.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  Sequence encode(const std::vector<std::string>& tokens) const;
  std::string decode(const Sequence& seq) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Throws UsageError if the sequence is empty or contains an id outside
// [0, vocab_size) or a PAD/BOS/EOS id.
void validate_sequence(const Sequence& seq, std::size_t vocab_size);

}  // namespace noisyst
