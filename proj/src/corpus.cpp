#include "textrobust/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "textrobust/hashing.hpp"
#include "textrobust/unicode.hpp"

namespace textrobust {

using nlohmann::json;

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

std::optional<Split> parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    return std::nullopt;
}

std::vector<const Example*> Dataset::split_examples(Split s) const {
    std::vector<const Example*> out;
    for (const auto& ex : examples) {
        if (ex.split == s) out.push_back(&ex);
    }
    return out;
}

std::vector<std::size_t> TokenizedText::word_subtokens(std::size_t word_index) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < subtokens.size(); ++i) {
        if (subtokens[i].word_index == word_index) out.push_back(i);
    }
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> pieces, std::uint32_t hash_buckets)
    : id_to_piece_(std::move(pieces)), hash_buckets_(hash_buckets) {
    for (std::uint32_t i = 0; i < id_to_piece_.size(); ++i) {
        piece_to_id_.emplace(id_to_piece_[i], i);
        max_piece_scalars_ =
            std::max(max_piece_scalars_, utf8_decode_or_throw(id_to_piece_[i]).size());
    }
}

std::optional<std::uint32_t> Vocabulary::find_piece(const std::string& piece) const {
    auto it = piece_to_id_.find(piece);
    if (it == piece_to_id_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t Vocabulary::id_for(const std::string& piece) const {
    if (auto id = find_piece(piece)) return *id;
    const std::uint64_t h = fnv1a64(piece);
    return static_cast<std::uint32_t>(id_to_piece_.size()) +
           static_cast<std::uint32_t>(h % hash_buckets_);
}

namespace {

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
    throw std::runtime_error(what + ", line " + std::to_string(line_no));
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());

    Dataset ds;
    ds.name = path.stem().string();

    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    int max_label = -1;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            fail_line(line_no, std::string("malformed JSON (") + e.what() + ")");
        }
        if (!obj.is_object()) fail_line(line_no, "expected a JSON object");

        if (line_no == 1 && obj.contains("label_names")) {
            if (!obj["label_names"].is_array()) fail_line(line_no, "label_names must be an array");
            for (const auto& n : obj["label_names"]) {
                if (!n.is_string()) fail_line(line_no, "label_names entries must be strings");
                ds.label_names.push_back(n.get<std::string>());
            }
            have_header = true;
            continue;
        }

        Example ex;
        if (!obj.contains(schema.id_field) || !obj[schema.id_field].is_string()) {
            fail_line(line_no, "missing or non-string field '" + schema.id_field + "'");
        }
        ex.id = obj[schema.id_field].get<std::string>();
        if (!obj.contains(schema.text_field) || !obj[schema.text_field].is_string()) {
            fail_line(line_no, "missing or non-string field '" + schema.text_field + "'");
        }
        ex.text = obj[schema.text_field].get<std::string>();
        if (!obj.contains(schema.label_field) || !obj[schema.label_field].is_number_integer()) {
            fail_line(line_no, "missing or non-integer field '" + schema.label_field + "'");
        }
        ex.label = obj[schema.label_field].get<int>();
        if (!obj.contains(schema.split_field) || !obj[schema.split_field].is_string()) {
            fail_line(line_no, "missing or non-string field '" + schema.split_field + "'");
        }
        const auto split = parse_split(obj[schema.split_field].get<std::string>());
        if (!split) {
            fail_line(line_no, "unknown split '" + obj[schema.split_field].get<std::string>() + "'");
        }
        ex.split = *split;

        if (trimmed(ex.text).empty()) fail_line(line_no, "empty text for id \"" + ex.id + "\"");
        std::u32string scalars;
        if (!utf8_decode(ex.text, scalars)) fail_line(line_no, "text is not valid UTF-8");
        if (ex.label < 0) fail_line(line_no, "negative label");
        if (have_header && ex.label >= static_cast<int>(ds.label_names.size())) {
            fail_line(line_no, "label out of range");
        }
        if (!seen_ids.insert(ex.id).second) {
            fail_line(line_no, "duplicate id \"" + ex.id + "\"");
        }
        max_label = std::max(max_label, ex.label);
        ds.examples.push_back(std::move(ex));
    }

    if (ds.examples.empty()) throw std::runtime_error("empty dataset file: " + path.string());

    if (!have_header) {
        for (int c = 0; c <= max_label; ++c) {
            ds.label_names.push_back("class_" + std::to_string(c));
        }
    }
    if (ds.label_names.size() < 2) {
        throw std::runtime_error("dataset must have at least 2 classes, got " +
                                 std::to_string(ds.label_names.size()));
    }
    bool has_train = false;
    bool has_test = false;
    for (const auto& ex : ds.examples) {
        has_train |= ex.split == Split::train;
        has_test |= ex.split == Split::test;
    }
    if (!has_train) throw std::runtime_error("dataset has no train examples");
    if (!has_test) throw std::runtime_error("dataset has no test examples");
    return ds;
}

namespace {

bool all_punct(const std::u32string& s, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
        if (!is_punct_or_symbol(s[i])) return false;
    }
    return true;
}

void emit_word(std::vector<Word>& words, const std::u32string& scalars, std::size_t b,
               std::size_t e) {
    Word w;
    w.surface = utf8_encode(std::u32string_view(scalars).substr(b, e - b));
    w.begin = b;
    w.end = e;
    w.is_punctuation = all_punct(scalars, b, e);
    words.push_back(std::move(w));
}

}  // namespace

std::vector<Word> segment_words(const std::string& text) {
    const std::u32string scalars = utf8_decode_or_throw(text);
    std::vector<Word> words;
    std::size_t i = 0;
    const std::size_t n = scalars.size();
    while (i < n) {
        if (is_space(scalars[i])) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        while (run_end < n && !is_space(scalars[run_end])) ++run_end;

        // leading punctuation scalars become their own words
        std::size_t core_begin = i;
        while (core_begin < run_end && is_punct_or_symbol(scalars[core_begin])) {
            emit_word(words, scalars, core_begin, core_begin + 1);
            ++core_begin;
        }
        // trailing punctuation scalars likewise
        std::size_t core_end = run_end;
        while (core_end > core_begin && is_punct_or_symbol(scalars[core_end - 1])) --core_end;
        if (core_begin < core_end) {
            emit_word(words, scalars, core_begin, core_end);
        }
        for (std::size_t p = core_end; p < run_end; ++p) {
            emit_word(words, scalars, p, p + 1);
        }
        i = run_end;
    }
    return words;
}

std::vector<Subtoken> subtokenize(const std::string& word, const Vocabulary& vocab) {
    if (word.empty()) throw std::invalid_argument("subtokenize: empty word");
    const std::u32string scalars = utf8_decode_or_throw(word);
    std::vector<Subtoken> out;
    const std::size_t max_piece_len = vocab.max_piece_scalars();

    std::size_t i = 0;
    while (i < scalars.size()) {
        const std::size_t remaining = scalars.size() - i;
        std::string matched;
        for (std::size_t len = std::min(max_piece_len, remaining); len >= 1; --len) {
            std::string candidate = utf8_encode(std::u32string_view(scalars).substr(i, len));
            if (vocab.find_piece(candidate)) {
                matched = std::move(candidate);
                i += len;
                break;
            }
        }
        if (matched.empty()) {
            const std::size_t len = std::min<std::size_t>(4, remaining);
            matched = utf8_encode(std::u32string_view(scalars).substr(i, len));
            i += len;
        }
        Subtoken st;
        st.vocab_id = vocab.id_for(matched);
        st.piece = std::move(matched);
        out.push_back(std::move(st));
    }
    return out;
}

TokenizedText tokenize(const std::string& text, const Vocabulary& vocab) {
    TokenizedText tt;
    tt.words = segment_words(text);
    for (std::size_t w = 0; w < tt.words.size(); ++w) {
        for (auto& st : subtokenize(tt.words[w].surface, vocab)) {
            st.word_index = w;
            tt.subtokens.push_back(std::move(st));
        }
    }
    return tt;
}

Vocabulary build_vocabulary(const Dataset& dataset, std::size_t max_size,
                            std::uint32_t hash_buckets) {
    if (max_size < 256) throw std::invalid_argument("build_vocabulary: max_size must be >= 256");

    std::map<std::u32string, std::uint64_t> counts;
    bool saw_train = false;
    for (const auto& ex : dataset.examples) {
        if (ex.split != Split::train) continue;
        saw_train = true;
        for (const auto& word : segment_words(ex.text)) {
            const std::u32string s = utf8_decode_or_throw(word.surface);
            for (std::size_t len = 2; len <= 4; ++len) {
                if (s.size() < len) break;
                for (std::size_t i = 0; i + len <= s.size(); ++i) {
                    ++counts[s.substr(i, len)];
                }
            }
        }
    }
    if (!saw_train) throw std::runtime_error("build_vocabulary: empty training split");

    // frequency descending, ties by codepoint sequence ascending; std::map
    // iteration already gives the lexicographic order within a frequency
    std::vector<std::pair<std::u32string, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> pieces;
    pieces.reserve(std::min(max_size, ranked.size()));
    for (const auto& [gram, freq] : ranked) {
        (void)freq;
        if (pieces.size() >= max_size) break;
        pieces.push_back(utf8_encode(gram));
    }
    return Vocabulary(std::move(pieces), hash_buckets);
}

}  // namespace textrobust
