#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mqa/datapipe.hpp"
#include "mqa/errors.hpp"
#include "mqa/synth.hpp"
#include "mqa/textproc.hpp"
#include "reference.hpp"

using namespace mqa;

namespace {

std::string data_path(const std::string& name) {
  return std::string(MQA_TEST_DATA_DIR) + "/data/" + name;
}

ChatLog chat(std::string id, std::vector<std::pair<Speaker, std::string>> m) {
  ChatLog c{std::move(id), {}};
  for (std::size_t i = 0; i < m.size(); ++i) {
    c.messages.push_back({m[i].first, m[i].second, i * 2});
  }
  return c;
}

std::string serialize(const SynthCorpus& c) {
  std::ostringstream out;
  write_listings(out, c.listings);
  write_chats(out, c.chats);
  write_truth(out, c.truth);
  return out.str();
}

}  // namespace

TEST_CASE("stopword list has fifty distinct entries") {
  const auto& w = stopwords();
  CHECK(w.size() == 50);
  CHECK(std::set<std::string_view>(w.begin(), w.end()).size() == 50);
  CHECK(is_stopword("the"));
  CHECK_FALSE(is_stopword("black"));
}

TEST_CASE("match words drop punctuation") {
  CHECK(match_words("We have cream-white or black.") ==
        std::vector<std::string>{"we", "have", "cream", "white", "or",
                                 "black"});
}

TEST_CASE("longest common phrase trims stopwords at the edges") {
  const auto w = [](const char* s) { return match_words(s); };
  CHECK(longest_common_phrase(w("We have cream-white or black."),
                              w("We sell it in cream-white or black.")) == 4);
  CHECK(longest_common_phrase(w("it is the one"), w("it is the best")) == 0);
  CHECK(longest_common_phrase(w("red or blue"), w("green or blue")) == 1);
  CHECK(longest_common_phrase(w(""), w("anything")) == 0);
}

TEST_CASE("longest common phrase agrees with the brute-force oracle") {
  const std::vector<std::string> pool{"red", "or", "blue", "the", "cm",
                                      "by",  "of", "oak",  "we",  "steel"};
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(0, 9), word(0, pool.size() - 1);
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::string> a(len(rng)), b(len(rng));
    for (auto& x : a) x = pool[word(rng)];
    for (auto& x : b) x = pool[word(rng)];
    REQUIRE(longest_common_phrase(a, b) == reference::common_phrase(a, b));
  }
}

TEST_CASE("cat tower chat mines the colour sentence") {
  const auto chats = read_chats_file(data_path("cat_tower_chat.jsonl"));
  const auto listings = read_listings_file(data_path("cat_tower_listing.jsonl"));
  REQUIRE(chats.size() == 1);
  REQUIRE(listings.size() == 1);
  const auto ex = mine_examples(chats[0], listings[0]);
  REQUIRE(ex.size() == 3);
  const auto& colour = ex[2];
  CHECK(colour.question == "What colours are there?");
  CHECK(colour.label == 5);
  CHECK(colour.candidates[colour.label - 1] ==
        "We sell it in cream-white or black.");
  CHECK(colour.context.size() == 4);
  CHECK(colour.context.front().text == "Can you do delivery?");
  CHECK(colour.listing_id == "cat-tower-1");
  // Neither earlier reply repeats description words.
  CHECK(ex[0].label == 0);
  CHECK(ex[1].label == 0);
}

TEST_CASE("mining rules") {
  const Listing listing{"l", "t",
                        "Made of solid oak wood. Red or blue colours. "
                        "Solid oak wood again."};
  SUBCASE("zero overlap gives a negative") {
    const auto ex = mine_examples(
        chat("l", {{Speaker::kBuyer, "Is it new?"},
                   {Speaker::kSeller, "Sorry, not sure."}}),
        listing);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].label == 0);
  }
  SUBCASE("ties go to the earliest sentence") {
    const auto ex = mine_examples(
        chat("l", {{Speaker::kBuyer, "Material?"},
                   {Speaker::kSeller, "It is solid oak wood."}}),
        listing);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].label == 1);
    const auto reply = match_words("It is solid oak wood.");
    const auto sentences = split_sentences(listing.description);
    CHECK(reference::common_phrase(reply, match_words(sentences[0])) ==
          reference::common_phrase(reply, match_words(sentences[2])));
  }
  SUBCASE("two-word matches are skipped") {
    const auto ex = mine_examples(
        chat("l", {{Speaker::kBuyer, "Colour?"},
                   {Speaker::kSeller, "Just blue colours."}}),
        listing);
    CHECK(ex.size() == 0);
  }
  SUBCASE("only a buyer message directly followed by a seller counts") {
    const auto ex = mine_examples(
        chat("l", {{Speaker::kBuyer, "Hi"},
                   {Speaker::kBuyer, "Material?"},
                   {Speaker::kSeller, "Solid oak wood."},
                   {Speaker::kSeller, "Red or blue colours."}}),
        listing);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].question == "Material?");
    CHECK(ex[0].context.size() == 1);
  }
  SUBCASE("context keeps the most recent messages") {
    std::vector<std::pair<Speaker, std::string>> m;
    for (int i = 0; i < 14; ++i) m.push_back({Speaker::kBuyer, std::to_string(i)});
    m.push_back({Speaker::kBuyer, "Material?"});
    m.push_back({Speaker::kSeller, "Solid oak wood."});
    MiningOptions opts;
    opts.max_history = 10;
    const auto ex = mine_examples(chat("l", m), listing, opts);
    REQUIRE(ex.size() == 1);
    REQUIRE(ex[0].context.size() == 10);
    CHECK(ex[0].context.front().text == "4");
    CHECK(ex[0].context.back().text == "13");
  }
  SUBCASE("empty description yields nothing") {
    const auto ex = mine_examples(
        chat("l", {{Speaker::kBuyer, "?"}, {Speaker::kSeller, "x y z"}}),
        Listing{"l", "t", "  "});
    CHECK(ex.empty());
  }
  SUBCASE("non-increasing indices are rejected") {
    auto c = chat("l", {{Speaker::kBuyer, "a"}, {Speaker::kSeller, "b"}});
    c.messages[1].index = c.messages[0].index;
    CHECK_THROWS_AS(mine_examples(c, listing), ValidationError);
  }
}

TEST_CASE("mined labels are sound and deterministic") {
  SynthOptions o;
  o.seed = 3;
  o.n_listings = 60;
  o.questions_per_listing = 5;
  const auto corpus = generate_synthetic(o);
  const auto a = mine_corpus(corpus.chats, corpus.listings);
  const auto b = mine_corpus(corpus.chats, corpus.listings);
  CHECK(a == b);
  REQUIRE(!a.empty());
  // Each chat holds one buyer-to-seller turn whose reply is its last message.
  std::map<std::string, std::vector<const ChatLog*>> by_listing;
  for (const auto& c : corpus.chats) by_listing[c.listing_id].push_back(&c);
  for (const auto& ex : a) {
    if (ex.label == 0) continue;
    bool sound = false;
    for (const auto* c : by_listing[ex.listing_id]) {
      if (c->messages[c->messages.size() - 2].text != ex.question) continue;
      const auto reply = match_words(c->messages.back().text);
      sound |= reference::common_phrase(
                   reply, match_words(ex.candidates[ex.label - 1])) >= 3;
    }
    CHECK(sound);
  }
}

TEST_CASE("synthetic generator") {
  SUBCASE("same seed, same bytes") {
    SynthOptions o;
    o.seed = 7;
    o.n_listings = 50;
    CHECK(serialize(generate_synthetic(o)) == serialize(generate_synthetic(o)));
    SynthOptions other = o;
    other.seed = 8;
    CHECK(serialize(generate_synthetic(o)) !=
          serialize(generate_synthetic(other)));
  }
  SUBCASE("zero negative fraction gives no no-answer labels") {
    SynthOptions o;
    o.seed = 1;
    o.n_listings = 200;
    o.negative_fraction = 0.0;
    const auto c = generate_synthetic(o);
    const auto ex = mine_corpus(c.chats, c.listings);
    CHECK(ex.size() == c.chats.size());
    for (const auto& e : ex) CHECK(e.label != 0);
  }
  SUBCASE("default negative share over 10K questions") {
    SynthOptions o;
    o.seed = 2;
    o.n_listings = 1000;
    o.questions_per_listing = 10;
    const auto c = generate_synthetic(o);
    REQUIRE(c.truth.size() == 10000);
    const auto neg = std::count_if(c.truth.begin(), c.truth.end(),
                                   [](const SynthTruth& t) { return t.label == 0; });
    CHECK(std::abs(static_cast<double>(neg) / 10000.0 - 0.37) <= 0.02);
  }
  SUBCASE("truth labels point at the answer sentence") {
    SynthOptions o;
    o.seed = 5;
    o.n_listings = 100;
    for (bool ctx : {false, true}) {
      o.context_sensitive = ctx;
      const auto c = generate_synthetic(o);
      std::map<std::string, const Listing*> lookup;
      for (const auto& l : c.listings) lookup[l.listing_id] = &l;
      for (const auto& t : c.truth) {
        const auto sentences = split_sentences(lookup[t.listing_id]->description);
        REQUIRE(t.label <= sentences.size());
        const auto reply = match_words(c.chats[t.chat].messages.back().text);
        if (t.label == 0) {
          for (const auto& s : sentences) {
            CHECK(reference::common_phrase(reply, match_words(s)) <= 1);
          }
        } else {
          CHECK(reference::common_phrase(
                    reply, match_words(sentences[t.label - 1])) >= 3);
        }
      }
    }
  }
  SUBCASE("mining recovers the generator's answers") {
    SynthOptions o;
    o.seed = 9;
    o.n_listings = 100;
    o.questions_per_listing = 10;
    const auto c = generate_synthetic(o);
    std::size_t positives = 0, recovered = 0;
    for (const auto& t : c.truth) {
      const auto* listing = &*std::find_if(
          c.listings.begin(), c.listings.end(),
          [&](const Listing& l) { return l.listing_id == t.listing_id; });
      const auto ex = mine_examples(c.chats[t.chat], *listing);
      REQUIRE(ex.size() <= 1);
      if (t.label == 0) {
        CHECK((ex.size() == 1 && ex[0].label == 0));
        continue;
      }
      ++positives;
      recovered += ex.size() == 1 && ex[0].label == t.label;
    }
    CHECK(static_cast<double>(recovered) >= 0.99 * static_cast<double>(positives));
  }
}

TEST_CASE("split") {
  SUBCASE("empty input") {
    const auto [train, test] = split({}, 0.9, 1);
    CHECK(train.empty());
    CHECK(test.empty());
  }
  SUBCASE("fraction must be inside (0, 1)") {
    CHECK_THROWS_AS(split({}, 0.0, 1), ContractViolation);
    CHECK_THROWS_AS(split({}, 1.0, 1), ContractViolation);
  }
  SUBCASE("10K listings land near the target share, disjointly") {
    std::vector<QAExample> ex;
    for (int i = 0; i < 10000; ++i) {
      QAExample e;
      e.listing_id = "listing-" + std::to_string(i);
      e.candidates = {"x"};
      ex.push_back(e);
      ex.push_back(e);
    }
    const auto [train, test] = split(ex, 0.9, 42);
    const double share = static_cast<double>(train.size()) / ex.size();
    CHECK(share >= 0.88);
    CHECK(share <= 0.92);
    std::set<std::string> a, b;
    for (const auto& e : train) a.insert(e.listing_id);
    for (const auto& e : test) b.insert(e.listing_id);
    for (const auto& id : a) CHECK_FALSE(b.count(id));
    const auto again = split(ex, 0.9, 42);
    CHECK(again.first == train);
    CHECK(again.second == test);
    CHECK(split(ex, 0.9, 43).first != train);
  }
}

TEST_CASE("dataset io") {
  SUBCASE("round trip") {
    SynthOptions o;
    o.seed = 4;
    o.n_listings = 20;
    o.context_sensitive = true;
    const auto c = generate_synthetic(o);
    const auto ex = mine_corpus(c.chats, c.listings);
    std::stringstream buf;
    write_dataset(buf, ex);
    CHECK(read_dataset(buf) == ex);
  }
  SUBCASE("label past the last candidate names the line") {
    std::stringstream buf(
        R"({"context":[],"question":"q","candidates":["a"],"label":1,"listing_id":"x"})"
        "\n"
        R"({"context":[],"question":"q","candidates":["a"],"label":2,"listing_id":"x"})"
        "\n");
    try {
      read_dataset(buf);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("truncated final line keeps earlier records") {
    std::ifstream in(data_path("truncated_dataset.jsonl"));
    REQUIRE(in);
    std::vector<QAExample> got;
    try {
      read_dataset_into(in, got);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    REQUIRE(got.size() == 2);
    CHECK(got[0].label == 1);
    CHECK(got[1].context.size() == 1);
  }
  SUBCASE("bad speaker is a validation error") {
    std::stringstream buf(
        R"({"context":[{"speaker":"bot","text":"x"}],"question":"q","candidates":[],"label":0,"listing_id":"x"})"
        "\n");
    CHECK_THROWS_AS(read_dataset(buf), ValidationError);
  }
  SUBCASE("listings and chats round trip") {
    SynthOptions o;
    o.n_listings = 5;
    const auto c = generate_synthetic(o);
    std::stringstream l, ch;
    write_listings(l, c.listings);
    write_chats(ch, c.chats);
    CHECK(read_listings(l) == c.listings);
    CHECK(read_chats(ch) == c.chats);
    const auto pairs = extract_reply_pairs(c.chats);
    CHECK(pairs.size() == c.chats.size());
    std::stringstream p;
    write_pairs(p, pairs);
    CHECK(read_pairs(p) == pairs);
  }
}
