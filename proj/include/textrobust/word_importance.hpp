#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textrobust/attribution.hpp"
#include "textrobust/corpus.hpp"

namespace textrobust {

struct RankedWord {
    std::size_t word_index = 0;
    double importance = 0.0;
};

// Descending importance, ties broken by ascending word position.
// Punctuation words never appear in ranked.
struct WordRanking {
    std::string example_id;
    std::string method;
    std::vector<RankedWord> ranked;
    std::vector<std::size_t> excluded_word_indices;
};

// Word importance = arithmetic mean of the word's subtoken attribution
// scores; punctuation words are excluded from the ranking entirely.
// rank_abs ranks by |importance| while keeping the signed value.
WordRanking aggregate(const TokenizedText& tokens, const TokenAttribution& attribution,
                      bool rank_abs = false);

// Uniform random permutation of the non-punctuation word indices
// (importance fields zero); the baseline ranking.
WordRanking random_ranking(const TokenizedText& tokens, std::uint64_t seed);

// First min(n, available) word indices in rank order; prefix property
// holds between n and n+1 by construction.
std::vector<std::size_t> top_n(const WordRanking& ranking, std::size_t n);

}  // namespace textrobust
