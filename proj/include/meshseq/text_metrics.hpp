#pragma once

// Caption metrics over whitespace tokens, ASCII case-folded, no stemming.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meshseq {

std::vector<std::string> caption_tokens(std::string_view text);

/// Clipped unigram precision times the brevity penalty
/// exp(min(0, 1 - r/c)), r = reference length closest to c (shorter on ties).
double bleu1(std::string_view candidate, std::span<const std::string> references);
double bleu1(std::string_view candidate, std::string_view reference);

/// LCS F-measure: (1 + b^2) P R / (R + b^2 P).
double rouge_l(std::string_view candidate, std::string_view reference, double beta = 1.2);

} // namespace meshseq
