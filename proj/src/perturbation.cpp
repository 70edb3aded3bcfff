#include "textrobust/perturbation.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "textrobust/hashing.hpp"
#include "textrobust/parallel.hpp"
#include "textrobust/unicode.hpp"

namespace textrobust {

using nlohmann::json;

const char* perturbation_kind_name(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::Key: return "Key";
        case PerturbationKind::OCR: return "OCR";
        case PerturbationKind::RIns: return "RIns";
        case PerturbationKind::RDel: return "RDel";
        case PerturbationKind::RSub: return "RSub";
        case PerturbationKind::RSw: return "RSw";
        case PerturbationKind::Dia: return "Dia";
        case PerturbationKind::Split: return "Split";
        case PerturbationKind::Ort: return "Ort";
        case PerturbationKind::Rel: return "Rel";
    }
    return "?";
}

std::optional<PerturbationKind> parse_perturbation_kind(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(PerturbationKind::Rel); ++k) {
        const auto kind = static_cast<PerturbationKind>(k);
        if (name == perturbation_kind_name(kind)) return kind;
    }
    return std::nullopt;
}

PerturbationLevel perturbation_level(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::Split:
        case PerturbationKind::Ort:
        case PerturbationKind::Rel:
            return PerturbationLevel::word;
        default:
            return PerturbationLevel::character;
    }
}

const char* failure_reason_name(FailureReason r) {
    switch (r) {
        case FailureReason::no_applicable_site: return "no_applicable_site";
        case FailureReason::word_too_short: return "word_too_short";
        case FailureReason::not_in_lexicon: return "not_in_lexicon";
    }
    return "?";
}

void LanguageResources::validate() const {
    for (const auto& [key, folded] : diacritic_fold) {
        (void)key;
        if (diacritic_fold.count(folded)) {
            throw std::runtime_error("resources: diacritic_fold is not idempotent, value '" +
                                     utf8_encode(folded) + "' is also a key");
        }
    }
    for (const auto& rule : ortho_rules) {
        if (rule.pattern.empty()) throw std::runtime_error("resources: empty ortho pattern");
        if (rule.pattern == rule.replacement) {
            throw std::runtime_error("resources: ortho rule maps '" + rule.pattern +
                                     "' to itself");
        }
    }
}

void LanguageResources::require_kind(PerturbationKind kind) const {
    auto need = [&](bool ok, const char* table) {
        if (!ok) {
            throw std::runtime_error(std::string("resources: ") + table + " is empty but kind " +
                                     perturbation_kind_name(kind) + " is enabled");
        }
    };
    switch (kind) {
        case PerturbationKind::Key: need(!keyboard_adjacency.empty(), "keyboard_adjacency"); break;
        case PerturbationKind::OCR: need(!ocr_confusions.empty(), "ocr_confusions"); break;
        case PerturbationKind::Dia: need(!diacritic_fold.empty(), "diacritic_fold"); break;
        case PerturbationKind::Ort: need(!ortho_rules.empty(), "ortho_rules"); break;
        case PerturbationKind::Rel: need(!relation_lexicon.empty(), "relation_lexicon"); break;
        case PerturbationKind::RIns:
        case PerturbationKind::RSub: need(!alphabet.empty(), "alphabet"); break;
        default: break;
    }
}

int char_budget_cap(std::size_t word_length) {
    const std::size_t ceil_3l_over_20 = (3 * word_length + 19) / 20;
    return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(ceil_3l_over_20, 4)));
}

int char_budget(std::size_t word_length, Rng& rng) {
    if (word_length < 1) throw std::invalid_argument("char_budget: word_length must be >= 1");
    return 1 + static_cast<int>(rng.uniform(static_cast<std::uint64_t>(char_budget_cap(word_length))));
}

namespace {

PerturbationOutcome failure(const std::string& word, FailureReason why) {
    PerturbationOutcome o;
    o.original = word;
    o.failure = why;
    return o;
}

PerturbationOutcome success(const std::string& word, std::u32string result) {
    PerturbationOutcome o;
    o.original = word;
    o.result = utf8_encode(result);
    if (*o.result == word) {
        // resource tables can in principle map a scalar to itself; treat
        // a no-op edit as an inapplicable site rather than a fake success
        o.result.reset();
        o.failure = FailureReason::no_applicable_site;
    }
    return o;
}

// positions of scalars that have an entry in `table` (case-folded lookup)
template <typename Table>
std::vector<std::size_t> applicable_positions(const std::u32string& s, const Table& table,
                                              bool fold_case) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char32_t key = fold_case ? simple_lower(s[i]) : s[i];
        if (table.count(key)) out.push_back(i);
    }
    return out;
}

PerturbationOutcome perturb_key(const std::u32string& s, const std::string& word,
                                const LanguageResources& res, Rng& rng) {
    const int k = char_budget(s.size(), rng);
    const auto sites = applicable_positions(s, res.keyboard_adjacency, true);
    if (sites.empty()) return failure(word, FailureReason::no_applicable_site);
    std::u32string out = s;
    for (std::size_t si : rng.sample_indices(sites.size(), static_cast<std::size_t>(k))) {
        const std::size_t pos = sites[si];
        const std::u32string& neighbors = res.keyboard_adjacency.at(simple_lower(s[pos]));
        char32_t repl = neighbors[rng.uniform(neighbors.size())];
        // the replacement's case is drawn uniformly
        repl = rng.coin() ? simple_upper(repl) : simple_lower(repl);
        out[pos] = repl;
    }
    return success(word, out);
}

PerturbationOutcome perturb_ocr(const std::u32string& s, const std::string& word,
                                const LanguageResources& res, Rng& rng) {
    const int k = char_budget(s.size(), rng);
    const auto sites = applicable_positions(s, res.ocr_confusions, false);
    if (sites.empty()) return failure(word, FailureReason::no_applicable_site);
    std::u32string out = s;
    for (std::size_t si : rng.sample_indices(sites.size(), static_cast<std::size_t>(k))) {
        const std::size_t pos = sites[si];
        const std::u32string& confusable = res.ocr_confusions.at(s[pos]);
        out[pos] = confusable[rng.uniform(confusable.size())];
    }
    return success(word, out);
}

PerturbationOutcome perturb_rins(const std::u32string& s, const std::string& word,
                                 const LanguageResources& res, Rng& rng) {
    const int k = char_budget(s.size(), rng);
    const auto slots = rng.sample_indices(s.size() + 1, static_cast<std::size_t>(k));
    std::vector<char32_t> inserted;
    inserted.reserve(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        inserted.push_back(res.alphabet[rng.uniform(res.alphabet.size())]);
    }
    std::u32string out;
    out.reserve(s.size() + slots.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (next < slots.size() && slots[next] == i) {
            out.push_back(inserted[next]);
            ++next;
        }
        if (i < s.size()) out.push_back(s[i]);
    }
    return success(word, out);
}

PerturbationOutcome perturb_rdel(const std::u32string& s, const std::string& word, Rng& rng) {
    int k = char_budget(s.size(), rng);
    k = std::min<int>(k, static_cast<int>(s.size()) - 1);  // result must keep >= 1 scalar
    if (k < 1) return failure(word, FailureReason::word_too_short);
    const auto doomed = rng.sample_indices(s.size(), static_cast<std::size_t>(k));
    std::u32string out;
    out.reserve(s.size() - doomed.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (next < doomed.size() && doomed[next] == i) {
            ++next;
            continue;
        }
        out.push_back(s[i]);
    }
    return success(word, out);
}

PerturbationOutcome perturb_rsub(const std::u32string& s, const std::string& word,
                                 const LanguageResources& res, Rng& rng) {
    const int k = char_budget(s.size(), rng);
    std::u32string out = s;
    bool changed = false;
    for (std::size_t pos : rng.sample_indices(s.size(), static_cast<std::size_t>(k))) {
        std::u32string candidates;
        for (char32_t c : res.alphabet) {
            if (c != s[pos]) candidates.push_back(c);
        }
        if (candidates.empty()) continue;
        out[pos] = candidates[rng.uniform(candidates.size())];
        changed = true;
    }
    if (!changed) return failure(word, FailureReason::no_applicable_site);
    return success(word, out);
}

PerturbationOutcome perturb_rsw(const std::u32string& s, const std::string& word, Rng& rng) {
    if (s.size() < 2) return failure(word, FailureReason::word_too_short);
    const int k = char_budget(s.size(), rng);
    // adjacent pairs with differing scalars; chosen one at a time, each
    // pick removing its overlapping neighbours
    std::vector<std::size_t> pairs;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] != s[i + 1]) pairs.push_back(i);
    }
    if (pairs.empty()) return failure(word, FailureReason::no_applicable_site);
    std::vector<std::size_t> chosen;
    for (int picked = 0; picked < k && !pairs.empty(); ++picked) {
        const std::size_t i = pairs[rng.uniform(pairs.size())];
        chosen.push_back(i);
        std::erase_if(pairs, [i](std::size_t p) { return p + 1 >= i && p <= i + 1; });
    }
    std::u32string out = s;
    for (std::size_t i : chosen) std::swap(out[i], out[i + 1]);
    return success(word, out);
}

PerturbationOutcome perturb_dia(const std::u32string& s, const std::string& word,
                                const LanguageResources& res, Rng& rng) {
    const int k = char_budget(s.size(), rng);
    const auto sites = applicable_positions(s, res.diacritic_fold, false);
    if (sites.empty()) return failure(word, FailureReason::no_applicable_site);
    std::u32string out = s;
    if (sites.size() <= static_cast<std::size_t>(k)) {
        for (std::size_t pos : sites) out[pos] = res.diacritic_fold.at(s[pos]);
    } else {
        for (std::size_t si : rng.sample_indices(sites.size(), static_cast<std::size_t>(k))) {
            out[sites[si]] = res.diacritic_fold.at(s[sites[si]]);
        }
    }
    return success(word, out);
}

PerturbationOutcome perturb_split(const std::u32string& s, const std::string& word, Rng& rng) {
    if (s.size() < 2) return failure(word, FailureReason::word_too_short);
    const std::size_t pos = 1 + rng.uniform(s.size() - 1);
    std::u32string out = s;
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), U' ');
    return success(word, out);
}

std::vector<std::size_t> pattern_occurrences(const std::u32string& s, const std::u32string& pat,
                                             bool non_initial) {
    std::vector<std::size_t> out;
    if (pat.empty() || pat.size() > s.size()) return out;
    for (std::size_t i = non_initial ? 1 : 0; i + pat.size() <= s.size(); ++i) {
        if (s.compare(i, pat.size(), pat) == 0) out.push_back(i);
    }
    return out;
}

PerturbationOutcome perturb_ort(const std::u32string& s, const std::string& word,
                                const LanguageResources& res, Rng& rng) {
    std::vector<std::size_t> applicable;
    std::vector<std::pair<std::u32string, std::u32string>> decoded;
    decoded.reserve(res.ortho_rules.size());
    for (std::size_t r = 0; r < res.ortho_rules.size(); ++r) {
        decoded.emplace_back(utf8_decode_or_throw(res.ortho_rules[r].pattern),
                             utf8_decode_or_throw(res.ortho_rules[r].replacement));
        if (!pattern_occurrences(s, decoded[r].first, res.ortho_rules[r].non_initial).empty()) {
            applicable.push_back(r);
        }
    }
    if (applicable.empty()) return failure(word, FailureReason::no_applicable_site);
    const std::size_t r = applicable[rng.uniform(applicable.size())];
    const auto occs = pattern_occurrences(s, decoded[r].first, res.ortho_rules[r].non_initial);
    const std::size_t pos = occs[rng.uniform(occs.size())];
    std::u32string out = s.substr(0, pos);
    out += decoded[r].second;
    out += s.substr(pos + decoded[r].first.size());
    return success(word, out);
}

PerturbationOutcome perturb_rel(const std::string& word, const LanguageResources& res, Rng& rng) {
    const auto it = res.relation_lexicon.find(word);
    if (it == res.relation_lexicon.end()) return failure(word, FailureReason::not_in_lexicon);
    std::vector<const std::string*> choices;
    for (const auto& c : it->second) {
        if (c != word) choices.push_back(&c);
    }
    if (choices.empty()) return failure(word, FailureReason::not_in_lexicon);
    PerturbationOutcome o;
    o.original = word;
    o.result = *choices[rng.uniform(choices.size())];
    return o;
}

}  // namespace

PerturbationOutcome perturb_word(const std::string& word, PerturbationKind kind,
                                 const LanguageResources& resources, Rng& rng) {
    const std::u32string s = utf8_decode_or_throw(word);
    if (s.empty()) throw std::invalid_argument("perturb_word: empty word");
    switch (kind) {
        case PerturbationKind::Key: return perturb_key(s, word, resources, rng);
        case PerturbationKind::OCR: return perturb_ocr(s, word, resources, rng);
        case PerturbationKind::RIns: return perturb_rins(s, word, resources, rng);
        case PerturbationKind::RDel: return perturb_rdel(s, word, rng);
        case PerturbationKind::RSub: return perturb_rsub(s, word, resources, rng);
        case PerturbationKind::RSw: return perturb_rsw(s, word, rng);
        case PerturbationKind::Dia: return perturb_dia(s, word, resources, rng);
        case PerturbationKind::Split: return perturb_split(s, word, rng);
        case PerturbationKind::Ort: return perturb_ort(s, word, resources, rng);
        case PerturbationKind::Rel: return perturb_rel(word, resources, rng);
    }
    throw std::logic_error("perturb_word: unknown kind");
}

PerturbedExample perturb_example(const Example& example, const TokenizedText& tokens,
                                 const WordRanking& ranking, std::size_t n,
                                 PerturbationKind kind, const LanguageResources& resources,
                                 std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("perturb_example: n must be >= 1");
    if (ranking.ranked.empty()) {
        throw std::runtime_error("perturb_example: no perturbable words in example " + example.id);
    }

    PerturbedExample out;
    out.base_id = example.id;
    out.kind = kind;
    out.method = ranking.method;
    out.n_requested = n;
    out.seed = seed;

    std::map<std::size_t, std::string> replacements;
    for (std::size_t word_index : top_n(ranking, n)) {
        Rng rng(stable_hash(seed, example.id, static_cast<std::uint64_t>(word_index)));
        auto outcome = perturb_word(tokens.words[word_index].surface, kind, resources, rng);
        outcome.word_index = word_index;
        if (outcome.success()) replacements.emplace(word_index, *outcome.result);
        out.outcomes.push_back(std::move(outcome));
    }

    // reassemble, preserving every scalar outside the replaced word spans
    const std::u32string scalars = utf8_decode_or_throw(example.text);
    std::u32string rebuilt;
    rebuilt.reserve(scalars.size() + 8);
    std::size_t cursor = 0;
    for (std::size_t w = 0; w < tokens.words.size(); ++w) {
        const Word& word = tokens.words[w];
        rebuilt.append(scalars, cursor, word.begin - cursor);
        const auto it = replacements.find(w);
        if (it != replacements.end()) {
            rebuilt += utf8_decode_or_throw(it->second);
        } else {
            rebuilt.append(scalars, word.begin, word.end - word.begin);
        }
        cursor = word.end;
    }
    rebuilt.append(scalars, cursor, scalars.size() - cursor);
    out.perturbed_text = utf8_encode(rebuilt);
    return out;
}

// ---- suite generation ----------------------------------------------------

namespace {

json outcome_to_json(const PerturbationOutcome& o) {
    json j{{"word_index", o.word_index}, {"original", o.original}};
    if (o.success()) {
        j["result"] = *o.result;
    } else {
        j["failure"] = failure_reason_name(*o.failure);
    }
    return j;
}

PerturbationOutcome outcome_from_json(const json& j) {
    PerturbationOutcome o;
    o.word_index = j.at("word_index").get<std::size_t>();
    o.original = j.at("original").get<std::string>();
    if (j.contains("result")) {
        o.result = j.at("result").get<std::string>();
    } else {
        const std::string f = j.at("failure").get<std::string>();
        if (f == "no_applicable_site") o.failure = FailureReason::no_applicable_site;
        else if (f == "word_too_short") o.failure = FailureReason::word_too_short;
        else if (f == "not_in_lexicon") o.failure = FailureReason::not_in_lexicon;
        else throw std::runtime_error("suite: unknown failure reason '" + f + "'");
    }
    return o;
}

std::string record_to_line(const PerturbedExample& pe) {
    json j{{"base_id", pe.base_id},
           {"kind", perturbation_kind_name(pe.kind)},
           {"method", pe.method},
           {"n", pe.n_requested},
           {"seed", pe.seed},
           {"perturbed_text", pe.perturbed_text}};
    json outs = json::array();
    for (const auto& o : pe.outcomes) outs.push_back(outcome_to_json(o));
    j["outcomes"] = outs;
    return j.dump();
}

}  // namespace

SuiteManifest generate_suite(const Dataset& dataset, const RankingSet& rankings,
                             const std::vector<PerturbationKind>& kinds,
                             const std::vector<int>& n_values,
                             const LanguageResources& resources, std::uint64_t seed,
                             const std::filesystem::path& out_dir, int threads) {
    resources.validate();
    for (PerturbationKind kind : kinds) resources.require_kind(kind);

    auto test_ptrs = dataset.split_examples(Split::test);
    std::sort(test_ptrs.begin(), test_ptrs.end(),
              [](const Example* a, const Example* b) { return a->id < b->id; });
    for (const auto& [method, by_id] : rankings) {
        for (const Example* e : test_ptrs) {
            if (!by_id.count(e->id)) {
                throw std::runtime_error("generate_suite: missing ranking for example '" + e->id +
                                         "' under method '" + method + "'");
            }
        }
    }

    // word spans are all the perturbation needs; tokenize once
    std::vector<TokenizedText> tokenized(test_ptrs.size());
    parallel_for(test_ptrs.size(), threads, [&](std::size_t i) {
        tokenized[i].words = segment_words(test_ptrs[i]->text);
    });

    std::filesystem::create_directories(out_dir);
    SuiteManifest manifest;
    manifest.seed = seed;
    manifest.resource_checksums = resources.file_checksums;

    for (PerturbationKind kind : kinds) {
        for (const auto& [method, by_id] : rankings) {
            const std::uint64_t file_seed =
                stable_hash(seed, "perturb", perturbation_kind_name(kind), method);
            for (int n : n_values) {
                std::vector<std::string> lines(test_ptrs.size());
                parallel_for(test_ptrs.size(), threads, [&](std::size_t i) {
                    const auto pe = perturb_example(*test_ptrs[i], tokenized[i],
                                                    by_id.at(test_ptrs[i]->id),
                                                    static_cast<std::size_t>(n), kind, resources,
                                                    file_seed);
                    lines[i] = record_to_line(pe);
                });
                SuiteFileInfo info;
                info.kind = perturbation_kind_name(kind);
                info.method = method;
                info.n = n;
                info.seed = file_seed;
                info.path = "perturbed_" + info.kind + "_" + method + "_n" + std::to_string(n) +
                            ".jsonl";
                std::string content;
                for (const auto& line : lines) {
                    content += line;
                    content += '\n';
                }
                std::ofstream out(out_dir / info.path, std::ios::binary | std::ios::trunc);
                if (!out) {
                    throw std::runtime_error("generate_suite: cannot write " +
                                             (out_dir / info.path).string());
                }
                out.write(content.data(), static_cast<std::streamsize>(content.size()));
                info.checksum = checksum_hex(content);
                manifest.files.push_back(std::move(info));
            }
        }
    }

    json mj{{"seed", manifest.seed}, {"resource_checksums", manifest.resource_checksums}};
    json files = json::array();
    for (const auto& f : manifest.files) {
        files.push_back(json{{"path", f.path},
                             {"kind", f.kind},
                             {"method", f.method},
                             {"n", f.n},
                             {"seed", f.seed},
                             {"checksum", f.checksum}});
    }
    mj["files"] = files;
    std::ofstream mout(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    mout << mj.dump(2) << "\n";
    if (!mout) throw std::runtime_error("generate_suite: cannot write manifest");
    return manifest;
}

SuiteManifest load_suite_manifest(const std::filesystem::path& suite_dir) {
    std::ifstream in(suite_dir / "manifest.json");
    if (!in) {
        throw std::runtime_error("missing suite manifest: " +
                                 (suite_dir / "manifest.json").string());
    }
    json mj;
    in >> mj;
    SuiteManifest manifest;
    manifest.seed = mj.at("seed").get<std::uint64_t>();
    manifest.resource_checksums =
        mj.at("resource_checksums").get<std::map<std::string, std::string>>();
    for (const auto& f : mj.at("files")) {
        SuiteFileInfo info;
        info.path = f.at("path").get<std::string>();
        info.kind = f.at("kind").get<std::string>();
        info.method = f.at("method").get<std::string>();
        info.n = f.at("n").get<int>();
        info.seed = f.at("seed").get<std::uint64_t>();
        info.checksum = f.at("checksum").get<std::string>();
        manifest.files.push_back(std::move(info));
    }
    return manifest;
}

std::vector<PerturbedExample> load_suite_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing suite file: " + path.string());
    std::vector<PerturbedExample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        PerturbedExample pe;
        pe.base_id = j.at("base_id").get<std::string>();
        const auto kind = parse_perturbation_kind(j.at("kind").get<std::string>());
        if (!kind) throw std::runtime_error("suite: unknown kind in " + path.string());
        pe.kind = *kind;
        pe.method = j.at("method").get<std::string>();
        pe.n_requested = j.at("n").get<std::size_t>();
        pe.seed = j.at("seed").get<std::uint64_t>();
        pe.perturbed_text = j.at("perturbed_text").get<std::string>();
        for (const auto& o : j.at("outcomes")) pe.outcomes.push_back(outcome_from_json(o));
        out.push_back(std::move(pe));
    }
    return out;
}

}  // namespace textrobust
