#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace dmtl {

// Online multitask target. Unlabeled masks the sentence out of the affect loss.
enum class AffectLabel : std::uint8_t { Unlabeled = 0, Positive = 1, Negative = 2 };

// Class index used by the two-way head: Positive -> 0, Negative -> 1.
inline std::optional<int> affect_class_index(AffectLabel label) {
    switch (label) {
        case AffectLabel::Positive: return 0;
        case AffectLabel::Negative: return 1;
        case AffectLabel::Unlabeled: break;
    }
    return std::nullopt;
}

std::string_view to_string(AffectLabel label);
std::optional<AffectLabel> parse_affect_label(std::string_view text);

}  // namespace dmtl
