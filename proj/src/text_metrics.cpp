#include "meshseq/text_metrics.hpp"

#include "meshseq/error.hpp"
#include "meshseq/text_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

namespace meshseq {

std::vector<std::string> caption_tokens(std::string_view text) {
    std::vector<std::string_view> views;
    split_whitespace(text, views);
    std::vector<std::string> out;
    out.reserve(views.size());
    for (auto v : views) {
        std::string tok(v);
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(std::move(tok));
    }
    return out;
}

double bleu1(std::string_view candidate, std::span<const std::string> references) {
    const auto cand = caption_tokens(candidate);
    if (cand.empty()) throw Error(ErrorKind::InvalidArgument, "empty candidate caption");
    if (references.empty()) throw Error(ErrorKind::InvalidArgument, "no reference captions");

    std::unordered_map<std::string, std::size_t> cand_counts;
    for (const auto& t : cand) ++cand_counts[t];

    std::unordered_map<std::string, std::size_t> max_ref_counts;
    const auto c = static_cast<long long>(cand.size());
    long long closest = -1;
    for (const auto& ref : references) {
        const auto toks = caption_tokens(ref);
        std::unordered_map<std::string, std::size_t> counts;
        for (const auto& t : toks) ++counts[t];
        for (const auto& [t, n] : counts) max_ref_counts[t] = std::max(max_ref_counts[t], n);
        const auto r = static_cast<long long>(toks.size());
        if (closest < 0 || std::llabs(r - c) < std::llabs(closest - c) ||
            (std::llabs(r - c) == std::llabs(closest - c) && r < closest)) {
            closest = r;
        }
    }

    std::size_t clipped = 0;
    for (const auto& [t, n] : cand_counts) {
        const auto it = max_ref_counts.find(t);
        if (it != max_ref_counts.end()) clipped += std::min(n, it->second);
    }
    const double precision = static_cast<double>(clipped) / static_cast<double>(c);
    const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(closest) / static_cast<double>(c)));
    return precision * bp;
}

double bleu1(std::string_view candidate, std::string_view reference) {
    const std::string refs[] = {std::string(reference)};
    return bleu1(candidate, refs);
}

double rouge_l(std::string_view candidate, std::string_view reference, double beta) {
    const auto cand = caption_tokens(candidate);
    const auto ref = caption_tokens(reference);
    if (cand.empty() || ref.empty()) throw Error(ErrorKind::InvalidArgument, "empty caption for ROUGE-L");

    // Two-row LCS table.
    std::vector<std::size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
    for (std::size_t i = 1; i <= cand.size(); ++i) {
        for (std::size_t j = 1; j <= ref.size(); ++j) {
            cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const auto lcs = static_cast<double>(prev[ref.size()]);
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(cand.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double b2 = beta * beta;
    return (1.0 + b2) * p * r / (r + b2 * p);
}

} // namespace meshseq
