#include "mqa/datapipe.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "mqa/errors.hpp"
#include "mqa/textproc.hpp"

namespace mqa {

using nlohmann::json;

// ------------------------------------------------------------------ mining

const std::vector<std::string_view>& stopwords() {
  static const std::vector<std::string_view> words{
      "a",    "an",   "the",  "and",  "or",    "but",   "if",    "of",
      "at",   "by",   "for",  "with", "about", "to",    "from",  "in",
      "on",   "over", "is",   "are",  "was",   "were",  "be",    "been",
      "it",   "its",  "this", "that", "these", "those", "i",     "you",
      "he",   "she",  "we",   "they", "me",    "my",    "your",  "our",
      "do",   "does", "can",  "will", "so",    "as",    "not",   "no",
      "yes",  "s"};
  return words;
}

bool is_stopword(std::string_view word) {
  const auto& w = stopwords();
  return std::find(w.begin(), w.end(), word) != w.end();
}

std::vector<std::string> match_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) {
    const bool punct =
        t.size() == 1 && static_cast<unsigned char>(t[0]) < 0x80 &&
        std::ispunct(static_cast<unsigned char>(t[0]));
    if (!punct) out.push_back(std::move(t));
  }
  return out;
}

std::size_t longest_common_phrase(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b) {
  // run[j] = length of the common suffix ending at a[i-1], b[j-1]. Every
  // shared n-gram is a sub-range of one of these runs, and trimming a
  // sub-range never yields more than trimming the whole run.
  std::vector<std::size_t> prev(b.size() + 1, 0), run(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      run[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      if (run[j] == 0) continue;
      std::size_t lo = i - run[j], hi = i;  // [lo, hi) in a
      while (lo < hi && is_stopword(a[lo])) ++lo;
      while (hi > lo && is_stopword(a[hi - 1])) --hi;
      best = std::max(best, hi - lo);
    }
    std::swap(prev, run);
  }
  return best;
}

std::vector<QAExample> mine_examples(const ChatLog& chat,
                                     const Listing& listing,
                                     const MiningOptions& opts) {
  const auto& msgs = chat.messages;
  for (std::size_t i = 1; i < msgs.size(); ++i) {
    if (msgs[i].index <= msgs[i - 1].index) {
      throw ValidationError("chat for listing " + chat.listing_id +
                            ": message indices not strictly increasing at " +
                            std::to_string(msgs[i].index));
    }
  }
  const auto sentences = split_sentences(listing.description);
  std::vector<QAExample> out;
  if (sentences.empty()) return out;
  std::vector<std::vector<std::string>> sentence_words;
  sentence_words.reserve(sentences.size());
  for (const auto& s : sentences) sentence_words.push_back(match_words(s));

  for (std::size_t m = 0; m + 1 < msgs.size(); ++m) {
    if (msgs[m].speaker != Speaker::kBuyer ||
        msgs[m + 1].speaker != Speaker::kSeller) {
      continue;
    }
    const auto reply = match_words(msgs[m + 1].text);
    std::size_t best_len = 0, best_idx = 0;
    for (std::size_t s = 0; s < sentence_words.size(); ++s) {
      const std::size_t len = longest_common_phrase(reply, sentence_words[s]);
      if (len > best_len) {
        best_len = len;
        best_idx = s;
      }
    }
    std::size_t label;
    if (best_len >= opts.positive_min_words) {
      label = best_idx + 1;
    } else if (best_len <= opts.negative_max_words) {
      label = 0;
    } else {
      continue;
    }
    QAExample ex;
    const std::size_t keep = std::min(m, opts.max_history);
    for (std::size_t c = m - keep; c < m; ++c) {
      ex.context.push_back({msgs[c].speaker, msgs[c].text});
    }
    ex.question = msgs[m].text;
    ex.candidates = sentences;
    ex.label = label;
    ex.listing_id = listing.listing_id;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<QAExample> mine_corpus(const std::vector<ChatLog>& chats,
                                   const std::vector<Listing>& listings,
                                   const MiningOptions& opts) {
  std::unordered_map<std::string, const Listing*> by_id;
  for (const auto& l : listings) by_id.emplace(l.listing_id, &l);
  std::vector<std::vector<QAExample>> per_chat(chats.size());
  std::vector<std::exception_ptr> errors(chats.size());
  const long n = static_cast<long>(chats.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    const auto it = by_id.find(chats[i].listing_id);
    if (it == by_id.end()) continue;
    try {
      per_chat[i] = mine_examples(chats[i], *it->second, opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<QAExample> out;
  for (auto& v : per_chat) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<ReplyPair> extract_reply_pairs(const std::vector<ChatLog>& chats) {
  std::vector<ReplyPair> out;
  for (const auto& c : chats) {
    for (std::size_t m = 0; m + 1 < c.messages.size(); ++m) {
      if (c.messages[m].speaker == Speaker::kBuyer &&
          c.messages[m + 1].speaker == Speaker::kSeller) {
        out.push_back({c.messages[m].text, c.messages[m + 1].text});
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------- split

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

bool in_train_split(std::string_view listing_id, double train_frac,
                    std::uint64_t seed) {
  const std::uint64_t h = mix(fnv1a(listing_id, 0xcbf29ce484222325ULL ^ mix(seed)));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < train_frac;
}

std::pair<std::vector<QAExample>, std::vector<QAExample>> split(
    const std::vector<QAExample>& examples, double train_frac,
    std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ContractViolation("train fraction must lie in (0, 1)");
  }
  std::pair<std::vector<QAExample>, std::vector<QAExample>> out;
  for (const auto& ex : examples) {
    (in_train_split(ex.listing_id, train_frac, seed) ? out.first : out.second)
        .push_back(ex);
  }
  return out;
}

// ---------------------------------------------------------------------- io

namespace {

json messages_json(const std::vector<Message>& msgs) {
  json arr = json::array();
  for (const auto& m : msgs) {
    arr.push_back({{"speaker", to_string(m.speaker)}, {"text", m.text}});
  }
  return arr;
}

// Runs `fn(record, lineno)` on every non-blank line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    try {
      fn(j, lineno);
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("bad record: ") + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " +
                            e.what());
    }
  }
}

template <typename T, typename Fn>
std::vector<T> read_file(const std::filesystem::path& p, Fn&& reader) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return reader(in);
}

}  // namespace

void write_dataset(std::ostream& out, const std::vector<QAExample>& examples) {
  for (const auto& ex : examples) {
    out << json{{"context", messages_json(ex.context)},
                {"question", ex.question},
                {"candidates", ex.candidates},
                {"label", ex.label},
                {"listing_id", ex.listing_id}}
               .dump()
        << '\n';
  }
}

void read_dataset_into(std::istream& in, std::vector<QAExample>& out) {
  for_each_record(in, [&](const json& j, std::size_t) {
    QAExample ex;
    for (const auto& m : j.at("context")) {
      ex.context.push_back({parse_speaker(m.at("speaker").get<std::string>()),
                            m.at("text").get<std::string>()});
    }
    j.at("question").get_to(ex.question);
    j.at("candidates").get_to(ex.candidates);
    const auto label = j.at("label").get<long long>();
    j.at("listing_id").get_to(ex.listing_id);
    if (label < 0 || static_cast<std::size_t>(label) > ex.candidates.size()) {
      throw ValidationError("label " + std::to_string(label) +
                            " out of range for " +
                            std::to_string(ex.candidates.size()) +
                            " candidates");
    }
    ex.label = static_cast<std::size_t>(label);
    out.push_back(std::move(ex));
  });
}

std::vector<QAExample> read_dataset(std::istream& in) {
  std::vector<QAExample> out;
  read_dataset_into(in, out);
  return out;
}

void write_listings(std::ostream& out, const std::vector<Listing>& listings) {
  for (const auto& l : listings) {
    out << json{{"listing_id", l.listing_id},
                {"title", l.title},
                {"description", l.description}}
               .dump()
        << '\n';
  }
}

std::vector<Listing> read_listings(std::istream& in) {
  std::vector<Listing> out;
  for_each_record(in, [&](const json& j, std::size_t) {
    Listing l;
    j.at("listing_id").get_to(l.listing_id);
    l.title = j.value("title", "");
    j.at("description").get_to(l.description);
    out.push_back(std::move(l));
  });
  return out;
}

void write_chats(std::ostream& out, const std::vector<ChatLog>& chats) {
  for (const auto& c : chats) {
    json msgs = json::array();
    for (const auto& m : c.messages) {
      msgs.push_back({{"speaker", to_string(m.speaker)},
                      {"text", m.text},
                      {"index", m.index}});
    }
    out << json{{"listing_id", c.listing_id}, {"messages", std::move(msgs)}}
               .dump()
        << '\n';
  }
}

std::vector<ChatLog> read_chats(std::istream& in) {
  std::vector<ChatLog> out;
  for_each_record(in, [&](const json& j, std::size_t) {
    ChatLog c;
    j.at("listing_id").get_to(c.listing_id);
    for (const auto& m : j.at("messages")) {
      c.messages.push_back({parse_speaker(m.at("speaker").get<std::string>()),
                            m.at("text").get<std::string>(),
                            m.at("index").get<std::size_t>()});
    }
    for (std::size_t i = 1; i < c.messages.size(); ++i) {
      if (c.messages[i].index <= c.messages[i - 1].index) {
        throw ValidationError("message indices not strictly increasing");
      }
    }
    out.push_back(std::move(c));
  });
  return out;
}

void write_pairs(std::ostream& out, const std::vector<ReplyPair>& pairs) {
  for (const auto& p : pairs) {
    out << json{{"context", p.context}, {"reply", p.reply}}.dump() << '\n';
  }
}

std::vector<ReplyPair> read_pairs(std::istream& in) {
  std::vector<ReplyPair> out;
  for_each_record(in, [&](const json& j, std::size_t) {
    out.push_back({j.at("context").get<std::string>(),
                   j.at("reply").get<std::string>()});
  });
  return out;
}

std::vector<QAExample> read_dataset_file(const std::filesystem::path& p) {
  return read_file<QAExample>(p, [](std::istream& in) { return read_dataset(in); });
}

void write_dataset_file(const std::filesystem::path& p,
                        const std::vector<QAExample>& examples) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  write_dataset(out, examples);
}

std::vector<Listing> read_listings_file(const std::filesystem::path& p) {
  return read_file<Listing>(p, [](std::istream& in) { return read_listings(in); });
}

std::vector<ChatLog> read_chats_file(const std::filesystem::path& p) {
  return read_file<ChatLog>(p, [](std::istream& in) { return read_chats(in); });
}

std::vector<ReplyPair> read_pairs_file(const std::filesystem::path& p) {
  return read_file<ReplyPair>(p, [](std::istream& in) { return read_pairs(in); });
}

}  // namespace mqa
