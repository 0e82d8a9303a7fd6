#include "mqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace mqa {

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError(std::string("truncated checkpoint reading ") + what);
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(buf[i]) << (8 * i);
  }
  return v;
}

std::string get_bytes(std::istream& in, std::size_t n, const char* what) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError(std::string("truncated checkpoint reading ") + what);
  }
  return s;
}

nlohmann::json vocab_json(const NGramVocab& v) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : v.entries()) entries.push_back({e.text, e.freq});
  return {{"unigram_count", v.unigram_count()},
          {"unigram_cap", v.unigram_cap()},
          {"bigram_cap", v.bigram_cap()},
          {"entries", std::move(entries)}};
}

NGramVocab vocab_from_json(const nlohmann::json& j) {
  std::vector<NGramEntry> entries;
  const auto& arr = j.at("entries");
  entries.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    entries.push_back({arr[i].at(0).get<std::string>(),
                       static_cast<NGramId>(i),
                       arr[i].at(1).get<std::uint64_t>()});
  }
  auto v = vocab_from_entries(entries, j.at("unigram_cap").get<std::size_t>(),
                              j.at("bigram_cap").get<std::size_t>());
  if (v.unigram_count() != j.at("unigram_count").get<std::size_t>()) {
    throw ValidationError("vocabulary unigram count disagrees with entries");
  }
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model) {
  const nlohmann::json cfg = {{"model", model.config},
                              {"vocab", vocab_json(model.vocab)}};
  const std::string text = cfg.dump();
  out.write(kCheckpointMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& p : model.params) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
    for (auto d : p.value.shape()) {
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double x : p.value.values()) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  save_checkpoint(out, model);
}

Model load_checkpoint(std::istream& in) {
  const std::string magic = get_bytes(in, 4, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("not a checkpoint: bad magic");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("unsupported checkpoint version " +
                                  std::to_string(version) + " (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  const auto cfg_len = get_le<std::uint32_t>(in, "config length");
  const std::string cfg_text = get_bytes(in, cfg_len, "config");
  ModelConfig config;
  NGramVocab vocab;
  try {
    const auto cfg = nlohmann::json::parse(cfg_text);
    config = cfg.at("model").get<ModelConfig>();
    vocab = vocab_from_json(cfg.at("vocab"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint config: ") + e.what());
  }
  const auto count = get_le<std::uint32_t>(in, "tensor count");
  ParamSet params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = get_le<std::uint16_t>(in, "tensor name length");
    std::string name = get_bytes(in, name_len, "tensor name");
    const auto rank = get_le<std::uint8_t>(in, "tensor rank");
    if (rank < 1 || rank > 2) {
      throw FormatError("tensor '" + name + "' has unsupported rank " +
                        std::to_string(rank));
    }
    if (params.find(name)) {
      throw ValidationError("duplicate tensor '" + name + "'");
    }
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = get_le<std::uint32_t>(in, "tensor dims");
    const std::size_t idx = params.add(name, dims);
    for (double& x : params.value(idx).values()) {
      x = std::bit_cast<double>(get_le<std::uint64_t>(in, "tensor payload"));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after last tensor");
  }
  return Model::from_parts(config, std::move(vocab), std::move(params));
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace mqa
