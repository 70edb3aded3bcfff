#include "textrobust/word_importance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "textrobust/rng.hpp"

namespace textrobust {

WordRanking aggregate(const TokenizedText& tokens, const TokenAttribution& attribution,
                      bool rank_abs) {
    if (attribution.scores.size() != tokens.subtokens.size()) {
        throw std::invalid_argument("aggregate: attribution length " +
                                    std::to_string(attribution.scores.size()) +
                                    " does not match subtoken count " +
                                    std::to_string(tokens.subtokens.size()));
    }

    WordRanking out;
    out.method = attribution_kind_name(attribution.kind);

    std::vector<double> sums(tokens.words.size(), 0.0);
    std::vector<std::size_t> counts(tokens.words.size(), 0);
    for (std::size_t t = 0; t < tokens.subtokens.size(); ++t) {
        const std::size_t w = tokens.subtokens[t].word_index;
        if (w >= tokens.words.size()) throw std::invalid_argument("aggregate: bad word index");
        sums[w] += attribution.scores[t];
        ++counts[w];
    }

    for (std::size_t w = 0; w < tokens.words.size(); ++w) {
        if (tokens.words[w].is_punctuation) {
            out.excluded_word_indices.push_back(w);
            continue;
        }
        if (counts[w] == 0) {
            throw std::invalid_argument("aggregate: word " + std::to_string(w) +
                                        " has no subtokens");
        }
        out.ranked.push_back({w, sums[w] / static_cast<double>(counts[w])});
    }

    auto key = [rank_abs](const RankedWord& r) {
        return rank_abs ? std::fabs(r.importance) : r.importance;
    };
    std::sort(out.ranked.begin(), out.ranked.end(),
              [&](const RankedWord& a, const RankedWord& b) {
                  if (key(a) != key(b)) return key(a) > key(b);
                  return a.word_index < b.word_index;
              });
    return out;
}

WordRanking random_ranking(const TokenizedText& tokens, std::uint64_t seed) {
    WordRanking out;
    out.method = "random";
    std::vector<std::size_t> candidates;
    for (std::size_t w = 0; w < tokens.words.size(); ++w) {
        if (tokens.words[w].is_punctuation) {
            out.excluded_word_indices.push_back(w);
        } else {
            candidates.push_back(w);
        }
    }
    if (candidates.empty()) throw std::runtime_error("random_ranking: no perturbable words");
    Rng rng(seed);
    rng.shuffle(candidates);
    for (std::size_t w : candidates) out.ranked.push_back({w, 0.0});
    return out;
}

std::vector<std::size_t> top_n(const WordRanking& ranking, std::size_t n) {
    if (n < 1) throw std::invalid_argument("top_n: n must be >= 1");
    std::vector<std::size_t> out;
    const std::size_t take = std::min(n, ranking.ranked.size());
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(ranking.ranked[i].word_index);
    return out;
}

}  // namespace textrobust
