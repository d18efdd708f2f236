#pragma once

#include <span>
#include <string_view>

namespace lcrr::wordlists {

// Vocabulary for synthetic filler prose. Disjoint from needle_keys() and free
// of every reserved needle phrase.
std::span<const std::string_view> filler_words();

// English words used as NIAH keys.
std::span<const std::string_view> needle_keys();

}  // namespace lcrr::wordlists
