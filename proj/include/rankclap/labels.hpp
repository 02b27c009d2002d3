#ifndef RANKCLAP_LABELS_HPP_
#define RANKCLAP_LABELS_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "rankclap/errors.hpp"

namespace rankclap {

// A point in the valence-arousal plane. Both attributes live on the 1..7
// annotation scale; evaluation grids reach down to 0.5, which sets the lower
// bound accepted here.
class ValenceArousal {
 public:
  static constexpr double kMin = 0.5;
  static constexpr double kMax = 7.0;

  ValenceArousal(double valence, double arousal) : valence_(valence), arousal_(arousal) {
    if (!in_range(valence) || !in_range(arousal)) {
      throw InvalidArgument("ValenceArousal: (" + std::to_string(valence) + ", " +
                            std::to_string(arousal) + ") outside [0.5, 7]");
    }
  }

  double valence() const noexcept { return valence_; }
  double arousal() const noexcept { return arousal_; }

  friend bool operator==(const ValenceArousal&, const ValenceArousal&) = default;

  static bool in_range(double x) noexcept { return std::isfinite(x) && x >= kMin && x <= kMax; }

 private:
  double valence_;
  double arousal_;
};

// Euclidean distance in the valence-arousal plane.
inline double label_distance(const ValenceArousal& a, const ValenceArousal& b) {
  return std::hypot(a.valence() - b.valence(), a.arousal() - b.arousal());
}

// Quadrant around the scale midpoint (4, 4): bit 0 set for valence >= 4,
// bit 1 set for arousal >= 4.
inline int quadrant(const ValenceArousal& y) noexcept {
  return (y.valence() >= 4.0 ? 1 : 0) + (y.arousal() >= 4.0 ? 2 : 0);
}

struct StylePrompt {
  ValenceArousal label;
  std::string prompt_text;
};

inline constexpr std::string_view kStylePromptPreamble = "Given the following scale of emotions";

namespace detail {
inline std::string one_decimal(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  return buf;
}
}  // namespace detail

// Caption-generation prompt for an external LLM.
inline StylePrompt render_style_prompt(const ValenceArousal& label) {
  std::string text;
  text += kStylePromptPreamble;
  text +=
      " - valence (1-very negative; 7-very positive), arousal (1-very calm; 7-very active), "
      "write a sentence describing a speaking style that is ";
  text += detail::one_decimal(label.valence());
  text += " on valence, ";
  text += detail::one_decimal(label.arousal());
  text +=
      " on arousal. Do not use any numbers in the sentence. The sentence should start with: "
      "The person is speaking ...";
  return {label, std::move(text)};
}

// Bucket index 0..4 on the 1..7 scale:
//   [0.5, 2.5) | [2.5, 3.5) | [3.5, 4.5] | (4.5, 5.5] | (5.5, 7]
inline std::size_t attribute_bucket(double x) noexcept {
  if (x < 2.5) return 0;
  if (x < 3.5) return 1;
  if (x <= 4.5) return 2;
  if (x <= 5.5) return 3;
  return 4;
}

inline constexpr std::array<std::string_view, 5> kValenceWords = {
    "very negative", "somewhat negative", "neutral", "somewhat positive", "very positive"};
inline constexpr std::array<std::string_view, 5> kArousalWords = {
    "very calm", "fairly calm", "neither calm nor active", "fairly active", "highly active"};

// Deterministic offline stand-in for an LLM-written caption.
inline std::string template_caption(const ValenceArousal& label) {
  std::string s = "The person is speaking in a ";
  s += kValenceWords[attribute_bucket(label.valence())];
  s += " tone, sounding ";
  s += kArousalWords[attribute_bucket(label.arousal())];
  s += ".";
  return s;
}

enum class OrdinalityMode { kValence, kArousal };

inline std::string_view to_string(OrdinalityMode m) noexcept {
  return m == OrdinalityMode::kValence ? "voc" : "aoc";
}

inline OrdinalityMode parse_ordinality_mode(std::string_view s) {
  if (s == "voc" || s == "VOC") return OrdinalityMode::kValence;
  if (s == "aoc" || s == "AOC") return OrdinalityMode::kArousal;
  throw InvalidArgument("unknown ordinality mode '" + std::string(s) + "'");
}

inline double varied_attribute(const ValenceArousal& y, OrdinalityMode m) noexcept {
  return m == OrdinalityMode::kValence ? y.valence() : y.arousal();
}

inline constexpr std::size_t kGridListLength = 14;

// Retrieval query lists. The varied attribute runs 0.5..7.0 in steps of 0.5;
// the fixed attribute starts at 0.5, grows by 0.5 per list and wraps back to
// 0.5 after 7.0.
inline std::vector<std::vector<ValenceArousal>> eval_grid(OrdinalityMode mode, std::size_t n_lists) {
  if (n_lists < 1) throw InvalidArgument("eval_grid: n_lists must be >= 1");
  std::vector<std::vector<ValenceArousal>> lists;
  lists.reserve(n_lists);
  for (std::size_t l = 0; l < n_lists; ++l) {
    const double fixed = 0.5 * static_cast<double>(l % kGridListLength + 1);
    std::vector<ValenceArousal> list;
    list.reserve(kGridListLength);
    for (std::size_t k = 0; k < kGridListLength; ++k) {
      const double varied = 0.5 * static_cast<double>(k + 1);
      if (mode == OrdinalityMode::kValence)
        list.emplace_back(varied, fixed);
      else
        list.emplace_back(fixed, varied);
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

}  // namespace rankclap

#endif  // RANKCLAP_LABELS_HPP_
