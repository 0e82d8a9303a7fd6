#include "mqa/synth.hpp"

#include <algorithm>
#include <array>
#include <ostream>
#include <random>

#include "json.hpp"
#include "mqa/errors.hpp"

namespace mqa {

namespace {

using Pool = std::vector<std::string_view>;

const Pool kColors{"red",    "blue",   "green",  "black",  "white",
                   "cream",  "grey",   "navy",   "beige",  "maroon",
                   "olive",  "teal",   "pink",   "purple", "orange",
                   "yellow", "brown",  "silver", "gold",   "ivory",
                   "cream-white", "charcoal", "mint", "lavender"};
const Pool kPlaces{"tampines", "jurong",   "bishan",  "bedok",
                   "woodlands", "clementi", "serangoon", "punggol",
                   "sengkang", "yishun",   "novena",  "outram",
                   "buona vista", "pasir ris", "ang mo kio", "toa payoh"};
const Pool kCouriers{"ninja van", "qxpress", "lalamove", "grab express",
                     "gogovan", "normal mail", "registered mail"};
const Pool kMaterials{"solid oak",  "walnut",     "teak",     "pine wood",
                      "bamboo",     "steel",      "aluminium", "leather",
                      "canvas",     "linen",      "velvet",   "rattan",
                      "marble",     "tempered glass", "cotton", "wool"};
const Pool kFinishes{"matte", "glossy", "satin", "brushed", "lacquered",
                     "distressed", "natural", "polished"};
const Pool kTerms{"firm", "nett", "negotiable", "fixed", "or best offer"};
const Pool kProducts{"cat tower", "bookshelf", "desk lamp", "armchair",
                     "backpack", "coffee table", "wardrobe", "bar stool",
                     "shoe rack", "bed frame", "side table", "tote bag"};

// Sentence templates per attribute; "{}" is the key phrase.
const std::array<Pool, kAttributeCount> kSentences{{
    {"We sell it in {}.", "Available in {}.", "It comes in {}.",
     "Colours are {}.", "You can pick {}."},
    {"It measures {}.", "Dimensions are {}.", "Size is {}.",
     "The footprint is {}."},
    {"Selling at {}.", "Price is {}.", "Letting go at {}.",
     "Asking {}."},
    {"Delivery is {}.", "Collection is {}.", "Deal via {}.",
     "Shipping is {}."},
    {"Made of {}.", "Built from {}.", "Crafted in {}.",
     "The body is {}."},
}};
// Shared templates force the value words to carry the attribute.
const Pool kGenericSentences{"We have {}.", "Also {} on offer."};

const std::array<Pool, kAttributeCount> kQuestions{{
    {"What colours are there?", "What colors do you have?",
     "Which colour is it?", "Any other colours?", "Is there another color?"},
    {"What are the dimensions?", "How big is it?", "What size is it?",
     "Can you share the measurements?", "How large is it?"},
    {"Is the price negotiable?", "How much is it?", "What is the price?",
     "Can you lower the price?", "Any discount on the price?"},
    {"Can you do delivery?", "Do you deliver?", "How can I collect it?",
     "Is shipping possible?", "Where can we meet?"},
    {"What is it made of?", "What material is it?", "Is it real wood?",
     "Which material did you use?", "What is the build material?"},
}};
const std::array<Pool, kAttributeCount> kCueWords{{
    {"colour", "color", "colours"},
    {"size", "dimensions", "measurements"},
    {"price", "cost"},
    {"delivery", "shipping", "collection"},
    {"material", "build"},
}};
const Pool kGenericQuestions{"Which options do you have?",
                             "Can you tell me more?", "What is it like?",
                             "Any details?", "Could you share?"};
const Pool kCueTemplates{"I have a question about the {}.",
                         "Hello, asking about {}.", "Curious about {}."};
const Pool kGreetings{"Hi!", "Hello there!", "Hey, good evening."};
const Pool kPositiveReplies{"We have {}.", "It is {}.", "Yes, {}.", "{}."};
// No word here appears in any description template or value pool.
const Pool kNegativeReplies{"Sorry, I am not sure about that.",
                            "Let me check and get back to you.",
                            "Please chat me for details.",
                            "Hmm, good question."};
const Pool kFillers{"Great condition, rarely used.", "Smoke free home.",
                    "Selling because moving house.", "Bought last year.",
                    "Very sturdy and well kept.", "Pet free household.",
                    "Like new with original box.",
                    "Minor scratches, see photos."};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::string_view pick(const Pool& pool) { return pool[below(pool.size())]; }
  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, rng_);
  }

 private:
  std::mt19937_64 rng_;
};

std::string fill(std::string_view tmpl, std::string_view value) {
  std::string out(tmpl);
  const auto at = out.find("{}");
  out.replace(at, 2, value);
  if (at == 0 && !out.empty() && out[0] >= 'a' && out[0] <= 'z') {
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  }
  return out;
}

// Key phrases span at least three words and start and end on content words.
std::string key_phrase(Attribute a, Sampler& s) {
  switch (a) {
    case Attribute::kColor: {
      const auto c1 = s.pick(kColors);
      auto c2 = s.pick(kColors);
      while (c2 == c1) c2 = s.pick(kColors);
      return std::string(c1) + " or " + std::string(c2);
    }
    case Attribute::kSize:
      return std::to_string(s.between(10, 250)) + " cm by " +
             std::to_string(s.between(10, 250)) + " cm";
    case Attribute::kPrice:
      return std::to_string(s.between(5, 900)) + " dollars " +
             std::string(s.pick(kTerms));
    case Attribute::kDelivery:
      switch (s.below(3)) {
        case 0:
          return "meetup at " + std::string(s.pick(kPlaces)) + " station";
        case 1:
          return std::string(s.pick(kCouriers)) + " costs " +
                 std::to_string(s.between(3, 40)) + " dollars";
        default:
          return "by " + std::string(s.pick(kCouriers)) + " within " +
                 std::string(s.pick(kPlaces));
      }
    case Attribute::kMaterial:
      return std::string(s.pick(kMaterials)) + " with a " +
             std::string(s.pick(kFinishes)) + " finish";
  }
  throw ContractViolation("unknown attribute");
}

}  // namespace

std::string_view to_string(Attribute a) {
  static constexpr std::array<std::string_view, kAttributeCount> names{
      "color", "size", "price", "delivery", "material"};
  return names[static_cast<std::size_t>(a)];
}

SynthCorpus generate_synthetic(const SynthOptions& opts) {
  if (!(opts.negative_fraction >= 0.0 && opts.negative_fraction <= 1.0)) {
    throw ContractViolation("negative fraction must lie in [0, 1]");
  }
  Sampler s(opts.seed);
  SynthCorpus out;
  for (std::size_t li = 0; li < opts.n_listings; ++li) {
    Listing listing;
    listing.listing_id = "L" + std::to_string(opts.seed) + "-" +
                         std::to_string(li);
    const auto product = s.pick(kProducts);

    std::array<std::size_t, kAttributeCount> order{0, 1, 2, 3, 4};
    s.shuffle(order.begin(), order.end());
    const std::size_t n_present = s.between(2, 4);

    struct Line {
      std::string text;
      int attribute = -1;  // -1 for filler
      std::string key;
    };
    std::vector<Line> lines;
    for (std::size_t i = 0; i < n_present; ++i) {
      const auto a = static_cast<Attribute>(order[i]);
      std::string key = key_phrase(a, s);
      const auto& pool = s.coin(0.25) ? kGenericSentences
                                      : kSentences[order[i]];
      lines.push_back({fill(s.pick(pool), key), static_cast<int>(order[i]),
                       std::move(key)});
    }
    const std::size_t n_fillers = s.between(1, 2);
    std::vector<std::size_t> filler_ids(kFillers.size());
    for (std::size_t i = 0; i < filler_ids.size(); ++i) filler_ids[i] = i;
    s.shuffle(filler_ids.begin(), filler_ids.end());
    for (std::size_t i = 0; i < n_fillers; ++i) {
      lines.push_back({std::string(kFillers[filler_ids[i]]), -1, {}});
    }
    s.shuffle(lines.begin(), lines.end());

    for (const auto& l : lines) {
      if (!listing.description.empty()) listing.description += ' ';
      listing.description += l.text;
    }
    std::string title(product);
    title[0] = static_cast<char>(title[0] - 'a' + 'A');
    listing.title = title;

    for (std::size_t qi = 0; qi < opts.questions_per_listing; ++qi) {
      SynthTruth truth;
      truth.listing_id = listing.listing_id;
      truth.chat = out.chats.size();
      std::string reply;
      if (s.coin(opts.negative_fraction)) {
        const std::size_t absent = n_present + s.below(kAttributeCount - n_present);
        truth.attribute = static_cast<Attribute>(order[absent]);
        truth.label = 0;
        reply = s.pick(kNegativeReplies);
      } else {
        const std::size_t present = s.below(n_present);
        truth.attribute = static_cast<Attribute>(order[present]);
        for (std::size_t i = 0; i < lines.size(); ++i) {
          if (lines[i].attribute == static_cast<int>(order[present])) {
            truth.label = i + 1;
            reply = fill(s.pick(kPositiveReplies), lines[i].key);
          }
        }
      }
      const auto a = static_cast<std::size_t>(truth.attribute);
      ChatLog chat;
      chat.listing_id = listing.listing_id;
      std::size_t index = 0;
      if (opts.context_sensitive) {
        chat.messages.push_back(
            {Speaker::kBuyer,
             fill(s.pick(kCueTemplates), s.pick(kCueWords[a])), index++});
        chat.messages.push_back(
            {Speaker::kBuyer, std::string(s.pick(kGenericQuestions)), index++});
      } else {
        if (s.coin(0.5)) {
          chat.messages.push_back(
              {Speaker::kBuyer, std::string(s.pick(kGreetings)), index++});
        }
        chat.messages.push_back(
            {Speaker::kBuyer, std::string(s.pick(kQuestions[a])), index++});
      }
      chat.messages.push_back({Speaker::kSeller, std::move(reply), index++});
      out.chats.push_back(std::move(chat));
      out.truth.push_back(std::move(truth));
    }
    out.listings.push_back(std::move(listing));
  }
  return out;
}

void write_truth(std::ostream& out, const std::vector<SynthTruth>& truth) {
  for (const auto& t : truth) {
    out << nlohmann::json{{"listing_id", t.listing_id},
                          {"chat", t.chat},
                          {"attribute", to_string(t.attribute)},
                          {"label", t.label}}
               .dump()
        << '\n';
  }
}

}  // namespace mqa
