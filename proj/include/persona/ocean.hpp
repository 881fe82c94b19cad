#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace persona {

enum class Trait : std::size_t {
  kOpenness = 0,
  kConscientiousness = 1,
  kExtraversion = 2,
  kAgreeableness = 3,
  kNeuroticism = 4,
};

inline constexpr std::size_t kTraitCount = 5;
inline constexpr double kOceanMin = 1.0;
inline constexpr double kOceanMax = 7.0;

inline constexpr std::array<std::string_view, kTraitCount> kTraitNames = {
    "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"};

// Accepts full names or the single initials O/C/E/A/N, case-insensitive.
std::optional<Trait> parse_trait(std::string_view name);

/// Big Five scores, one value per trait on the 1..7 scale.
struct OceanScores {
  std::array<double, kTraitCount> values{4.0, 4.0, 4.0, 4.0, 4.0};

  double& operator[](Trait t) { return values[static_cast<std::size_t>(t)]; }
  double operator[](Trait t) const { return values[static_cast<std::size_t>(t)]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double openness() const { return values[0]; }
  double conscientiousness() const { return values[1]; }
  double extraversion() const { return values[2]; }
  double agreeableness() const { return values[3]; }
  double neuroticism() const { return values[4]; }

  bool in_range() const;
  void clamp();

  // Shortest round-trip decimal, comma separated.
  std::string to_string() const;
  static std::optional<OceanScores> parse(std::string_view text);

  friend bool operator==(const OceanScores&, const OceanScores&) = default;
};

// One trait at `high`, the rest at `rest`.
OceanScores extreme_personality(Trait high_trait, double high = 6.5, double rest = 3.5);

}  // namespace persona
