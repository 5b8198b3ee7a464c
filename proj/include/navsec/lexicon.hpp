#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace navsec {

/// Closed set of landmark names. A landmark id is an index into this list,
/// so ids are stable across worlds and the vocabulary is world-independent.
std::span<const std::string_view> landmark_lexicon() noexcept;

std::optional<int> landmark_id(std::string_view name) noexcept;

}  // namespace navsec
