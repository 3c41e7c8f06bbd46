#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace actionsense::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Splits on ASCII whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// The single normalization used by every metric: lowercase, punctuation
// replaced by spaces (apostrophes deleted), whitespace split. Object tags
// such as "[Object3]" survive as one token ("[object3]").
std::vector<std::string> tokenize(std::string_view s);

// Rule-based singularization for English nouns ("tomatoes" -> "tomato").
std::string lemmatize_noun(std::string_view word);

// Present participle of an English verb ("crack" -> "cracking", "cut" -> "cutting").
std::string gerund(std::string_view verb);

// Dedup key for inference strings: lowercase, punctuation stripped, last
// word lemmatized.
std::string normalize_phrase(std::string_view s);

// Porter (1980) suffix-stripping stemmer.
std::string porter_stem(std::string_view word);

std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a, used to derive per-item RNG seeds.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace actionsense::text
