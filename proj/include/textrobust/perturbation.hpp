#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "textrobust/corpus.hpp"
#include "textrobust/rng.hpp"
#include "textrobust/word_importance.hpp"

namespace textrobust {

enum class PerturbationKind { Key, OCR, RIns, RDel, RSub, RSw, Dia, Split, Ort, Rel };
enum class PerturbationLevel { character, word };

const char* perturbation_kind_name(PerturbationKind k);
std::optional<PerturbationKind> parse_perturbation_kind(const std::string& name);
PerturbationLevel perturbation_level(PerturbationKind k);

struct OrthoRule {
    std::string pattern;
    std::string replacement;
    bool non_initial = false;  // rule may not fire at the first scalar
};

// Pluggable per-language tables; loaded from a resource-pack manifest.
struct LanguageResources {
    std::map<char32_t, std::u32string> keyboard_adjacency;
    std::map<char32_t, std::u32string> ocr_confusions;
    std::map<char32_t, char32_t> diacritic_fold;
    std::vector<OrthoRule> ortho_rules;
    std::map<std::string, std::vector<std::string>> relation_lexicon;
    std::u32string alphabet;
    std::map<std::string, std::string> file_checksums;  // component file → digest

    // invariants: fold is idempotent (no fold value is itself a key),
    // ortho patterns non-empty; plus the table needed by `kind` non-empty
    void validate() const;
    void require_kind(PerturbationKind kind) const;
};

LanguageResources load_resources(const std::filesystem::path& pack_manifest);

enum class FailureReason { no_applicable_site, word_too_short, not_in_lexicon };
const char* failure_reason_name(FailureReason r);

struct PerturbationOutcome {
    std::size_t word_index = 0;
    std::string original;
    std::optional<std::string> result;  // set iff the perturbation succeeded
    std::optional<FailureReason> failure;

    bool success() const { return result.has_value(); }
};

struct PerturbedExample {
    std::string base_id;
    PerturbationKind kind = PerturbationKind::RSub;
    std::string method;
    std::size_t n_requested = 0;
    std::vector<PerturbationOutcome> outcomes;
    std::string perturbed_text;
    std::uint64_t seed = 0;
};

// Number of character edits for one word: uniform in [1, cap] with
// cap = max(1, ceil(min(len * 0.15, 4))). len * 0.15 is evaluated exactly
// as 3*len/20 so the ceiling never picks up float noise.
int char_budget(std::size_t word_length, Rng& rng);
int char_budget_cap(std::size_t word_length);

// Applies one perturbation kind to one word. Failures are data, never
// exceptions; on success result != original.
PerturbationOutcome perturb_word(const std::string& word, PerturbationKind kind,
                                 const LanguageResources& resources, Rng& rng);

// Perturbs exactly the words top_n(ranking, n). The per-word RNG is seeded
// with stable_hash(seed, example_id, word_index), so the word at rank j
// gets the same edit in the n and n+1 suites.
PerturbedExample perturb_example(const Example& example, const TokenizedText& tokens,
                                 const WordRanking& ranking, std::size_t n,
                                 PerturbationKind kind, const LanguageResources& resources,
                                 std::uint64_t seed);

// method name → example id → ranking
using RankingSet = std::map<std::string, std::map<std::string, WordRanking>>;

struct SuiteFileInfo {
    std::string path;  // relative to the suite directory
    std::string kind;
    std::string method;
    int n = 0;
    std::uint64_t seed = 0;
    std::string checksum;
};

struct SuiteManifest {
    std::uint64_t seed = 0;
    std::map<std::string, std::string> resource_checksums;
    std::vector<SuiteFileInfo> files;
};

// One JSON-Lines file per (kind, n, method) over the test split, plus
// manifest.json. Parallel across examples; output bytes do not depend on
// the schedule.
SuiteManifest generate_suite(const Dataset& dataset, const RankingSet& rankings,
                             const std::vector<PerturbationKind>& kinds,
                             const std::vector<int>& n_values,
                             const LanguageResources& resources, std::uint64_t seed,
                             const std::filesystem::path& out_dir, int threads);

SuiteManifest load_suite_manifest(const std::filesystem::path& suite_dir);
std::vector<PerturbedExample> load_suite_file(const std::filesystem::path& path);

}  // namespace textrobust
