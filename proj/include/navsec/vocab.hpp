#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "navsec/templates.hpp"
#include "navsec/world.hpp"

namespace navsec {

/// Closed whole-word vocabulary. Layout: <pad>, <unk>, the five action words,
/// the numbers 0..63, template words, landmark names, then the 64-token attack
/// alphabet. Punctuation in kPunctuation is split off words and re-attached
/// without a space on detokenize.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kFirstAction = 2;
  static constexpr int kMaxNumber = 63;
  static constexpr int kAlphabetSize = 64;
  static constexpr std::string_view kPunctuation = ".,:;";

  static Vocab standard(const Templates& templates = default_templates());
  static Vocab from_json(const nlohmann::json& j);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view word) const;
  std::optional<int> find(std::string_view word) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  int action_id(Action a) const { return kFirstAction + index_of(a); }
  std::optional<Action> action_of(int id) const;
  /// Id of the first word of the observation template ("Step").
  int step_marker() const { return step_marker_; }
  int alphabet_begin() const { return alphabet_begin_; }
  int alphabet_end() const { return alphabet_begin_ + kAlphabetSize; }
  int filler() const { return alphabet_begin_; }

  std::vector<int> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const int> ids) const;
  static std::vector<std::string> split_words(std::string_view text);

  std::uint64_t digest() const { return digest_; }
  nlohmann::json to_json() const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  Vocab(std::vector<std::string> tokens, int alphabet_begin, int step_marker);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int alphabet_begin_ = 0;
  int step_marker_ = 0;
  std::uint64_t digest_ = 0;
};

std::span<const std::string_view> attack_alphabet() noexcept;

}  // namespace navsec
