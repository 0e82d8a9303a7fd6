#include "mqa/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "mqa/errors.hpp"

namespace mqa {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

struct BigramHash {
  std::size_t operator()(const std::pair<Token, Token>& p) const {
    const std::size_t h = std::hash<Token>()(p.first);
    return h ^ (std::hash<Token>()(p.second) + 0x9e3779b97f4a7c15ULL +
                (h << 6) + (h >> 2));
  }
};

template <typename Key>
std::vector<std::pair<Key, std::uint64_t>> top_k(
    std::vector<std::pair<Key, std::uint64_t>> counts, std::size_t cap) {
  std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (counts.size() > cap) counts.resize(cap);
  return counts;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  Token cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == 0xC2 && i + 1 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0xB7) {
      flush();
      ++i;
    } else if (is_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    const auto s = trim(text.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      emit(i);
      start = i + 1;
    } else if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() &&
               is_space(static_cast<unsigned char>(text[i + 1]))) {
      emit(i + 1);
      start = i + 1;
    }
  }
  emit(text.size());
  return out;
}

// ------------------------------------------------------------------ vocab

std::optional<NGramId> NGramVocab::unigram(const Token& t) const {
  const auto it = unigrams_.find(t);
  if (it == unigrams_.end()) return std::nullopt;
  return it->second;
}

std::optional<NGramId> NGramVocab::bigram(const Token& a, const Token& b) const {
  const auto it = bigrams_.find({a, b});
  if (it == bigrams_.end()) return std::nullopt;
  return it->second;
}

std::vector<NGramEntry> NGramVocab::entries() const {
  std::vector<NGramEntry> out;
  out.reserve(names_.size());
  for (std::size_t id = 0; id < names_.size(); ++id) {
    out.push_back({names_[id], static_cast<NGramId>(id), freqs_[id]});
  }
  return out;
}

void NGramVocab::add_unigram(const Token& t, std::uint64_t freq) {
  if (!bigrams_.empty()) {
    throw ContractViolation("unigrams must precede bigrams in a vocabulary");
  }
  const auto id = static_cast<NGramId>(names_.size());
  if (!unigrams_.emplace(t, id).second) {
    throw ValidationError("duplicate unigram '" + t + "'");
  }
  names_.push_back(t);
  freqs_.push_back(freq);
}

void NGramVocab::add_bigram(const Token& a, const Token& b,
                            std::uint64_t freq) {
  const auto id = static_cast<NGramId>(names_.size());
  if (!bigrams_.emplace(std::pair{a, b}, id).second) {
    throw ValidationError("duplicate bigram '" + a + kJoint + b + "'");
  }
  names_.push_back(a + kJoint + b);
  freqs_.push_back(freq);
}

NGramVocab build_vocab(std::span<const std::string> corpus,
                       std::size_t unigram_cap, std::size_t bigram_cap) {
  if (unigram_cap < 1 || bigram_cap < 1) {
    throw ContractViolation("vocabulary caps must be >= 1");
  }
  std::unordered_map<Token, std::uint64_t> uni;
  std::unordered_map<std::pair<Token, Token>, std::uint64_t, BigramHash> bi;
  for (const auto& text : corpus) {
    const auto toks = tokenize(text);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      ++uni[toks[i]];
      if (i + 1 < toks.size()) ++bi[{toks[i], toks[i + 1]}];
    }
  }
  NGramVocab v;
  v.unigram_cap_ = unigram_cap;
  v.bigram_cap_ = bigram_cap;
  for (const auto& [t, f] : top_k(std::vector<std::pair<Token, std::uint64_t>>(
                                      uni.begin(), uni.end()),
                                  unigram_cap)) {
    v.add_unigram(t, f);
  }
  for (const auto& [p, f] :
       top_k(std::vector<std::pair<std::pair<Token, Token>, std::uint64_t>>(
                 bi.begin(), bi.end()),
             bigram_cap)) {
    v.add_bigram(p.first, p.second, f);
  }
  return v;
}

NGramVocab vocab_from_entries(const std::vector<NGramEntry>& entries,
                              std::size_t unigram_cap, std::size_t bigram_cap) {
  NGramVocab v;
  v.unigram_cap_ = unigram_cap;
  v.bigram_cap_ = bigram_cap;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.id != i) {
      throw ValidationError("vocabulary ids must be dense and ordered; entry " +
                            std::to_string(i) + " has id " +
                            std::to_string(e.id));
    }
    const auto joint = e.text.find(NGramVocab::kJoint);
    if (joint == std::string::npos) {
      v.add_unigram(e.text, e.freq);
    } else {
      v.add_bigram(e.text.substr(0, joint),
                   e.text.substr(joint + NGramVocab::kJoint.size()), e.freq);
    }
  }
  if (v.unigram_count() > unigram_cap || v.bigram_count() > bigram_cap) {
    throw ValidationError("vocabulary exceeds its caps");
  }
  return v;
}

BagOfNGrams featurize(std::string_view text, const NGramVocab& vocab,
                      std::size_t max_tokens) {
  auto toks = tokenize(text);
  if (toks.size() > max_tokens) toks.resize(max_tokens);
  BagOfNGrams bag;
  for (const auto& t : toks) {
    if (auto id = vocab.unigram(t)) bag.ids.push_back(*id);
  }
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (auto id = vocab.bigram(toks[i], toks[i + 1])) bag.ids.push_back(*id);
  }
  return bag;
}

void write_vocab(std::ostream& out, const NGramVocab& vocab) {
  for (const auto& e : vocab.entries()) {
    out << e.text << '\t' << e.id << '\t' << e.freq << '\n';
  }
}

NGramVocab read_vocab(std::istream& in, std::size_t unigram_cap,
                      std::size_t bigram_cap) {
  std::vector<NGramEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ParseError(lineno, "expected <ngram>\\t<id>\\t<freq>");
    }
    try {
      std::size_t used = 0;
      const std::string id_s = line.substr(t1 + 1, t2 - t1 - 1);
      const std::string freq_s = line.substr(t2 + 1);
      const auto id = std::stoull(id_s, &used);
      if (used != id_s.size()) throw std::invalid_argument("id");
      const auto freq = std::stoull(freq_s, &used);
      if (used != freq_s.size()) throw std::invalid_argument("freq");
      entries.push_back(
          {line.substr(0, t1), static_cast<NGramId>(id), freq});
    } catch (const std::logic_error&) {
      throw ParseError(lineno, "bad numeric field");
    }
  }
  return vocab_from_entries(entries, unigram_cap, bigram_cap);
}

}  // namespace mqa
