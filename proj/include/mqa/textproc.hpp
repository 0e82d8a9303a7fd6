#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mqa {

using Token = std::string;
using NGramId = std::uint32_t;

// Lowercases ASCII letters, splits on whitespace, and emits every ASCII
// punctuation character as its own token. Bytes >= 0x80 are word characters,
// except the UTF-8 middle dot (U+00B7), which is reserved as the bigram joint
// in vocabulary files and is treated as whitespace.
std::vector<Token> tokenize(std::string_view text);

// Splits on newlines and after '.', '!' or '?' when followed by whitespace.
// The terminal punctuation stays with its sentence; results are trimmed and
// empty pieces dropped.
std::vector<std::string> split_sentences(std::string_view text);

// Multiset of n-gram ids for one text. Unigrams come first, then bigrams,
// each in text order.
struct BagOfNGrams {
  std::vector<NGramId> ids;
  bool empty() const { return ids.empty(); }
  friend bool operator==(const BagOfNGrams&, const BagOfNGrams&) = default;
};

struct NGramEntry {
  std::string text;  // unigram, or "a·b" for a bigram
  NGramId id;
  std::uint64_t freq;
};

// Frozen unigram + bigram vocabulary. Unigram ids occupy [0, U), bigram ids
// [U, U + B).
class NGramVocab {
 public:
  static inline const std::string kJoint = "\xC2\xB7";  // U+00B7

  NGramVocab() = default;

  std::size_t size() const { return unigrams_.size() + bigrams_.size(); }
  std::size_t unigram_count() const { return unigrams_.size(); }
  std::size_t bigram_count() const { return bigrams_.size(); }
  std::size_t unigram_cap() const { return unigram_cap_; }
  std::size_t bigram_cap() const { return bigram_cap_; }

  std::optional<NGramId> unigram(const Token& t) const;
  std::optional<NGramId> bigram(const Token& a, const Token& b) const;

  // Entries in id order.
  std::vector<NGramEntry> entries() const;

  friend bool operator==(const NGramVocab&, const NGramVocab&) = default;

 private:
  friend NGramVocab build_vocab(std::span<const std::string>, std::size_t,
                                std::size_t);
  friend NGramVocab vocab_from_entries(const std::vector<NGramEntry>&,
                                       std::size_t, std::size_t);

  void add_unigram(const Token& t, std::uint64_t freq);
  void add_bigram(const Token& a, const Token& b, std::uint64_t freq);

  std::map<Token, NGramId> unigrams_;
  std::map<std::pair<Token, Token>, NGramId> bigrams_;
  std::vector<std::uint64_t> freqs_;  // by id
  std::vector<std::string> names_;    // by id
  std::size_t unigram_cap_ = 0;
  std::size_t bigram_cap_ = 0;
};

// Keeps the most frequent unigrams and bigrams up to each cap; ties go to the
// lexicographically smaller n-gram. Bigrams never span two corpus entries.
NGramVocab build_vocab(std::span<const std::string> corpus,
                       std::size_t unigram_cap, std::size_t bigram_cap);

// Rebuilds a vocabulary from id-ordered entries (unigrams first).
NGramVocab vocab_from_entries(const std::vector<NGramEntry>& entries,
                              std::size_t unigram_cap, std::size_t bigram_cap);

inline constexpr std::size_t kNoTokenLimit =
    std::numeric_limits<std::size_t>::max();

// Ids of all in-vocabulary unigrams and bigrams of the text, duplicates
// kept. Only the first `max_tokens` tokens are considered.
BagOfNGrams featurize(std::string_view text, const NGramVocab& vocab,
                      std::size_t max_tokens = kNoTokenLimit);

// One `<ngram>\t<id>\t<freq>` line per entry, in id order.
void write_vocab(std::ostream& out, const NGramVocab& vocab);
NGramVocab read_vocab(std::istream& in, std::size_t unigram_cap,
                      std::size_t bigram_cap);

}  // namespace mqa
