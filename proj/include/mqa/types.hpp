#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mqa {

enum class Speaker { kBuyer, kSeller };

std::string_view to_string(Speaker s);
// Accepts "buyer" / "seller"; throws ValidationError otherwise.
Speaker parse_speaker(std::string_view s);

struct Message {
  Speaker speaker = Speaker::kBuyer;
  std::string text;
  friend bool operator==(const Message&, const Message&) = default;
};

// What the ranker sees: preceding messages, the question, and the candidate
// answer sentences a_1..a_N (the no-answer slot a_0 is implicit).
struct QAInput {
  std::vector<Message> context;
  std::string question;
  std::vector<std::string> candidates;
};

// A labelled QAInput. label 0 means no candidate answers the question,
// otherwise label k selects candidates[k - 1].
struct QAExample {
  std::vector<Message> context;
  std::string question;
  std::vector<std::string> candidates;
  std::size_t label = 0;
  std::string listing_id;

  friend bool operator==(const QAExample&, const QAExample&) = default;
};

// A message and the reply that followed it, for reply-ranking pre-training.
struct ReplyPair {
  std::string context;
  std::string reply;
  friend bool operator==(const ReplyPair&, const ReplyPair&) = default;
};

}  // namespace mqa
