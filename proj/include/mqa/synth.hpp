#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mqa/datapipe.hpp"

namespace mqa {

enum class Attribute { kColor, kSize, kPrice, kDelivery, kMaterial };
inline constexpr std::size_t kAttributeCount = 5;

std::string_view to_string(Attribute a);

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t n_listings = 100;
  std::size_t questions_per_listing = 10;
  // Share of questions asking about an attribute the listing lacks.
  double negative_fraction = 0.37;
  // Questions are generic ("Any options?") and the attribute is named only
  // in the preceding buyer message.
  bool context_sensitive = false;
};

// What the generator intended for one question.
struct SynthTruth {
  std::string listing_id;
  std::size_t chat = 0;  // index into SynthCorpus::chats
  Attribute attribute = Attribute::kColor;
  std::size_t label = 0;  // 1-based answer sentence, 0 when absent
};

struct SynthCorpus {
  std::vector<Listing> listings;
  std::vector<ChatLog> chats;  // one question per chat
  std::vector<SynthTruth> truth;
};

// Template-driven marketplace corpus. Each listing describes 2 to 4 of the
// five attributes plus filler sentences. Sellers answer by quoting the key
// phrase of the matching sentence, or with a stock reply sharing no words
// with the description. Output depends only on the options.
SynthCorpus generate_synthetic(const SynthOptions& opts);

void write_truth(std::ostream& out, const std::vector<SynthTruth>& truth);

}  // namespace mqa
