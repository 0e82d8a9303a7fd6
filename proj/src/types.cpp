#include "mqa/types.hpp"

#include "mqa/errors.hpp"

namespace mqa {

std::string_view to_string(Speaker s) {
  return s == Speaker::kBuyer ? "buyer" : "seller";
}

Speaker parse_speaker(std::string_view s) {
  if (s == "buyer") return Speaker::kBuyer;
  if (s == "seller") return Speaker::kSeller;
  throw ValidationError("unknown speaker '" + std::string(s) + "'");
}

}  // namespace mqa
