#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace textrobust {

enum class Split { train, validation, test };

const char* split_name(Split s);
std::optional<Split> parse_split(const std::string& s);

struct Example {
    std::string id;
    std::string text;
    int label = 0;
    Split split = Split::train;
};

struct Dataset {
    std::string name;
    std::vector<std::string> label_names;
    std::vector<Example> examples;

    int num_classes() const { return static_cast<int>(label_names.size()); }
    std::vector<const Example*> split_examples(Split s) const;
};

// Maps the JSON-Lines field names onto the Example fields.
struct DatasetSchema {
    std::string id_field = "id";
    std::string text_field = "text";
    std::string label_field = "label";
    std::string split_field = "split";
};

struct Word {
    std::string surface;
    std::size_t begin = 0;  // [begin, end) in Unicode scalar offsets
    std::size_t end = 0;
    bool is_punctuation = false;
};

struct Subtoken {
    std::string piece;
    std::size_t word_index = 0;
    std::uint32_t vocab_id = 0;
};

struct TokenizedText {
    std::vector<Word> words;
    std::vector<Subtoken> subtokens;

    // subtoken indices owned by one word
    std::vector<std::size_t> word_subtokens(std::size_t word_index) const;
};

// Piece inventory with a deterministic hashed-bucket fallback for pieces
// outside the inventory. Embedding tables size to table_size().
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> pieces, std::uint32_t hash_buckets);

    std::optional<std::uint32_t> find_piece(const std::string& piece) const;
    std::uint32_t id_for(const std::string& piece) const;

    const std::vector<std::string>& pieces() const { return id_to_piece_; }
    std::uint32_t hash_buckets() const { return hash_buckets_; }
    std::uint32_t table_size() const {
        return static_cast<std::uint32_t>(id_to_piece_.size()) + hash_buckets_;
    }
    std::size_t max_piece_scalars() const { return max_piece_scalars_; }

private:
    std::vector<std::string> id_to_piece_;
    std::unordered_map<std::string, std::uint32_t> piece_to_id_;
    std::uint32_t hash_buckets_ = 4096;
    std::size_t max_piece_scalars_ = 4;
};

// JSON-Lines loader; optional first-line header {"label_names": [...]}.
// Throws std::runtime_error with the offending line number on malformed
// input, duplicate ids or out-of-range labels.
Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema = {});

// Whitespace split with leading/trailing punctuation scalars split off as
// separate single-scalar punctuation words. A word is flagged punctuation
// iff all of its scalars are punctuation/symbol scalars.
std::vector<Word> segment_words(const std::string& text);

// Greedy longest match against the vocabulary, falling back to chunks of
// up to 4 scalars. word_index is left 0 for the caller to fill.
std::vector<Subtoken> subtokenize(const std::string& word, const Vocabulary& vocab);

TokenizedText tokenize(const std::string& text, const Vocabulary& vocab);

// Most frequent character 2-4-grams over training-split words, ties broken
// lexicographically. max_size must be >= 256.
Vocabulary build_vocabulary(const Dataset& dataset, std::size_t max_size,
                            std::uint32_t hash_buckets = 4096);

}  // namespace textrobust
