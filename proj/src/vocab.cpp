#include "navsec/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <set>

#include "navsec/error.hpp"
#include "navsec/lexicon.hpp"

namespace navsec {
namespace {

// "!" comes first: it is the suffix filler token.
constexpr std::array<std::string_view, Vocab::kAlphabetSize> kAlphabet = {
    "!",        "@",        "#",         "$",        "%",        "^",         "&",
    "*",        "(",        ")",         "-",        "+",        "=",         "[",
    "]",        "{",        "}",         "|",        "<",        ">",         "?",
    "/",        "~",        "`",         "_",        "\"",       "\\",        "describing",
    "similarly", "oppositely", "write",  "sure",     "here",     "please",    "revert",
    "skip",     "instead",  "cannot",    "always",   "never",    "immediately", "halt",
    "quit",     "wait",     "reverse",   "backwards", "detour",  "abort",     "cancel",
    "exit",     "previous", "done",      "arrived",  "finish",   "end",       "north",
    "south",    "east",     "west",      "zig",      "zag",      "via",       "whoa",
    "oops",
};

bool is_punct(char c) { return Vocab::kPunctuation.find(c) != std::string_view::npos; }

std::uint64_t fnv1a(const std::vector<std::string>& tokens) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : tokens) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::span<const std::string_view> attack_alphabet() noexcept { return kAlphabet; }

Vocab::Vocab(std::vector<std::string> tokens, int alphabet_begin, int step_marker)
    : tokens_(std::move(tokens)), alphabet_begin_(alphabet_begin), step_marker_(step_marker) {
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(tokens_[static_cast<std::size_t>(i)], i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
  if (size() > 4096) throw Error(ErrorCode::InvalidArgument, "vocabulary exceeds 4096 entries");
  digest_ = fnv1a(tokens_);
}

std::vector<std::string> Vocab::split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::string_view chunk = text.substr(i, j - i);
      std::vector<std::string> trailing;
      while (chunk.size() > 1 && is_punct(chunk.back())) {
        trailing.emplace_back(1, chunk.back());
        chunk.remove_suffix(1);
      }
      out.emplace_back(chunk);
      out.insert(out.end(), trailing.rbegin(), trailing.rend());
    }
    i = j;
  }
  return out;
}

Vocab Vocab::standard(const Templates& templates) {
  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (Action a : kAllActions) tokens.emplace_back(action_word(a));
  for (int n = 0; n <= kMaxNumber; ++n) tokens.push_back(std::to_string(n));

  std::set<std::string> reserved(tokens.begin(), tokens.end());
  for (auto w : kAlphabet) reserved.emplace(w);
  for (auto w : landmark_lexicon()) reserved.emplace(w);

  // Side words are substituted into templates at runtime.
  std::set<std::string> words = {"ahead", "left", "right", "behind"};
  for (const std::string* t : {&templates.task_description, &templates.observation,
                               &templates.landmark_clause, &templates.directive,
                               &templates.stop_directive, &templates.cot, &templates.ps,
                               &templates.rp, &templates.asp}) {
    for (auto& w : split_words(*t)) {
      if (w.front() == '{' && w.back() == '}') continue;
      words.insert(w);
    }
  }
  for (const auto& w : words) {
    if (!reserved.count(w)) tokens.push_back(w);
  }
  for (auto w : landmark_lexicon()) tokens.emplace_back(w);
  const int alphabet_begin = static_cast<int>(tokens.size());
  for (auto w : kAlphabet) {
    if (words.count(std::string(w))) {
      throw Error(ErrorCode::ConfigError, "template word collides with attack alphabet: " + std::string(w));
    }
    tokens.emplace_back(w);
  }
  const auto marker_words = split_words(templates.observation);
  if (marker_words.empty()) throw Error(ErrorCode::ConfigError, "empty observation template");
  Vocab v(std::move(tokens), alphabet_begin, 0);
  v.step_marker_ = v.id(marker_words.front());
  return v;
}

std::optional<int> Vocab::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(std::string_view word) const { return find(word).value_or(kUnk); }

std::optional<Action> Vocab::action_of(int id) const {
  if (id < kFirstAction || id >= kFirstAction + kNumActions) return std::nullopt;
  return static_cast<Action>(id - kFirstAction);
}

std::vector<int> Vocab::tokenize(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocab::detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    const std::string& w = token(id);
    const bool attach = w.size() == 1 && is_punct(w[0]);
    if (!out.empty() && !attach) out.push_back(' ');
    out += w;
  }
  return out;
}

nlohmann::json Vocab::to_json() const {
  return {{"schema_version", 1},
          {"tokens", tokens_},
          {"alphabet_begin", alphabet_begin_},
          {"step_marker", step_marker_},
          {"digest", digest_}};
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  if (!j.contains("schema_version") || j.at("schema_version") != 1) {
    throw Error(ErrorCode::SchemaMismatch, "vocabulary schema_version missing or unsupported");
  }
  try {
    Vocab v(j.at("tokens").get<std::vector<std::string>>(), j.at("alphabet_begin").get<int>(),
            j.at("step_marker").get<int>());
    if (j.contains("digest") && j.at("digest").get<std::uint64_t>() != v.digest()) {
      throw Error(ErrorCode::CorruptFile, "vocabulary digest mismatch");
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("vocabulary: ") + e.what());
  }
}

}  // namespace navsec
