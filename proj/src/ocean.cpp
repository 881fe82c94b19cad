#include "persona/ocean.hpp"

#include <algorithm>
#include <cctype>

#include "persona/text_util.hpp"

namespace persona {

std::optional<Trait> parse_trait(std::string_view name) {
  std::string lower;
  for (char c : trim(name)) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    if (lower == kTraitNames[i] || (lower.size() == 1 && lower[0] == kTraitNames[i][0])) {
      return static_cast<Trait>(i);
    }
  }
  return std::nullopt;
}

bool OceanScores::in_range() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return v >= kOceanMin && v <= kOceanMax; });
}

void OceanScores::clamp() {
  for (double& v : values) v = std::clamp(v, kOceanMin, kOceanMax);
}

std::string OceanScores::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::optional<OceanScores> OceanScores::parse(std::string_view text) {
  auto parts = split(text, ',');
  if (parts.size() != kTraitCount) return std::nullopt;
  OceanScores o;
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    auto v = parse_double(parts[i]);
    if (!v) return std::nullopt;
    o.values[i] = *v;
  }
  return o;
}

OceanScores extreme_personality(Trait high_trait, double high, double rest) {
  OceanScores o;
  o.values.fill(rest);
  o[high_trait] = high;
  return o;
}

}  // namespace persona
