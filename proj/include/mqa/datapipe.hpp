#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mqa/types.hpp"

namespace mqa {

struct ChatMessage {
  Speaker speaker = Speaker::kBuyer;
  std::string text;
  std::size_t index = 0;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatLog {
  std::string listing_id;
  std::vector<ChatMessage> messages;  // indices strictly increasing
  friend bool operator==(const ChatLog&, const ChatLog&) = default;
};

struct Listing {
  std::string listing_id;
  std::string title;
  std::string description;
  friend bool operator==(const Listing&, const Listing&) = default;
};

// ------------------------------------------------------------------ mining

// The 50 English function words ignored at the edges of a phrase match.
const std::vector<std::string_view>& stopwords();
bool is_stopword(std::string_view word);

// Lowercased word tokens (punctuation dropped) used for phrase matching.
std::vector<std::string> match_words(std::string_view text);

// Length in words of the longest word n-gram shared by `a` and `b`, after
// trimming stopwords from both ends of the shared n-gram.
std::size_t longest_common_phrase(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b);

struct MiningOptions {
  std::size_t max_history = 10;
  std::size_t positive_min_words = 3;  // match >= this: positive example
  std::size_t negative_max_words = 1;  // match <= this: no-answer example
};

// One example per buyer message that is directly followed by a seller reply.
// The reply is matched against every description sentence; a long enough
// shared phrase labels that sentence (earliest on ties), a near-zero match
// over all sentences labels no-answer, and anything in between is skipped.
// Throws ValidationError when message indices are not strictly increasing.
std::vector<QAExample> mine_examples(const ChatLog& chat,
                                     const Listing& listing,
                                     const MiningOptions& opts = {});

// Joins chats to listings by id. Chats without a listing are skipped. Mining
// runs per chat in parallel; output order follows the chat order.
std::vector<QAExample> mine_corpus(const std::vector<ChatLog>& chats,
                                   const std::vector<Listing>& listings,
                                   const MiningOptions& opts = {});

// Every buyer message directly followed by a seller reply, across all chats.
std::vector<ReplyPair> extract_reply_pairs(const std::vector<ChatLog>& chats);

// ------------------------------------------------------------------- split

// Deterministic listing-level split: a listing goes to train when a seeded
// hash of its id falls below train_frac, so no listing straddles the split.
std::pair<std::vector<QAExample>, std::vector<QAExample>> split(
    const std::vector<QAExample>& examples, double train_frac,
    std::uint64_t seed);

bool in_train_split(std::string_view listing_id, double train_frac,
                    std::uint64_t seed);

// ---------------------------------------------------------------------- io

// Line-delimited JSON. Readers throw ParseError (with the 1-based line) on
// malformed lines and ValidationError naming the line on invariant breaks.
void write_dataset(std::ostream& out, const std::vector<QAExample>& examples);
std::vector<QAExample> read_dataset(std::istream& in);
// Appends records to `out` as they are read; on error the records before the
// bad line are kept.
void read_dataset_into(std::istream& in, std::vector<QAExample>& out);

void write_listings(std::ostream& out, const std::vector<Listing>& listings);
std::vector<Listing> read_listings(std::istream& in);
void write_chats(std::ostream& out, const std::vector<ChatLog>& chats);
std::vector<ChatLog> read_chats(std::istream& in);

void write_pairs(std::ostream& out, const std::vector<ReplyPair>& pairs);
std::vector<ReplyPair> read_pairs(std::istream& in);

std::vector<QAExample> read_dataset_file(const std::filesystem::path& p);
void write_dataset_file(const std::filesystem::path& p,
                        const std::vector<QAExample>& examples);
std::vector<Listing> read_listings_file(const std::filesystem::path& p);
std::vector<ChatLog> read_chats_file(const std::filesystem::path& p);
std::vector<ReplyPair> read_pairs_file(const std::filesystem::path& p);

}  // namespace mqa
