#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "support/admissible.hpp"
#include "support/test_util.hpp"
#include "textrobust/hashing.hpp"
#include "textrobust/perturbation.hpp"
#include "textrobust/unicode.hpp"

using namespace textrobust;

namespace {

const LanguageResources& polish() {
    static const LanguageResources res =
        load_resources(std::filesystem::path(TEXTROBUST_SOURCE_DIR) / "resources/polish/pack.json");
    return res;
}

std::multiset<char32_t> scalar_multiset(const std::string& s) {
    const auto d = utf8_decode_or_throw(s);
    return {d.begin(), d.end()};
}

std::size_t scalar_len(const std::string& s) { return utf8_decode_or_throw(s).size(); }

// random word over the Polish alphabet plus some confusable scalars
std::string random_word(Rng& rng, std::size_t min_len = 1, std::size_t max_len = 14) {
    static const std::u32string pool = U"aąbcćdeęfghijklłmnńoóprsśtuwyzźżAOSIbl16";
    const std::size_t len = min_len + rng.uniform(max_len - min_len + 1);
    std::u32string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(pool[rng.uniform(pool.size())]);
    return utf8_encode(w);
}

}  // namespace

TEST_CASE("char budget stays within the ceil rule") {
    Rng rng(1);
    CHECK(char_budget_cap(7) == 2);   // 1.05 rounds up
    CHECK(char_budget_cap(8) == 2);   // 1.2 rounds up
    CHECK(char_budget_cap(20) == 3);  // exactly 3.0, no float noise
    CHECK(char_budget_cap(40) == 4);  // capped at 4
    CHECK(char_budget_cap(1) == 1);
    CHECK(char_budget_cap(6) == 1);

    std::set<int> seen7, seen40;
    for (int i = 0; i < 2000; ++i) {
        seen7.insert(char_budget(7, rng));
        seen40.insert(char_budget(40, rng));
    }
    CHECK(seen7 == std::set<int>{1, 2});
    CHECK(seen40 == std::set<int>{1, 2, 3, 4});
}

TEST_CASE("Dia folds the only diacritic deterministically") {
    Rng rng(2);
    const auto o = perturb_word("uwzględnia", PerturbationKind::Dia, polish(), rng);
    REQUIRE(o.success());
    CHECK(*o.result == "uwzglednia");
}

TEST_CASE("Dia without diacritics reports no applicable site") {
    Rng rng(3);
    const auto o = perturb_word("kot", PerturbationKind::Dia, polish(), rng);
    REQUIRE_FALSE(o.success());
    CHECK(*o.failure == FailureReason::no_applicable_site);
}

TEST_CASE("Ort rewrites opiekun to opiekón") {
    Rng rng(4);
    const auto o = perturb_word("opiekun", PerturbationKind::Ort, polish(), rng);
    REQUIRE(o.success());
    CHECK(*o.result == "opiekón");
}

TEST_CASE("Ort respects the non-initial constraint") {
    // the only 'u' is word-initial, and no other rule applies
    Rng rng(5);
    const auto o = perturb_word("ulica", PerturbationKind::Ort, polish(), rng);
    REQUIRE_FALSE(o.success());
    CHECK(*o.failure == FailureReason::no_applicable_site);
}

TEST_CASE("Rel substitutes from the lexicon and fails cleanly outside it") {
    Rng rng(6);
    const auto hit = perturb_word("niniejszy", PerturbationKind::Rel, polish(), rng);
    REQUIRE(hit.success());
    CHECK(*hit.result == "następujący");

    const auto miss = perturb_word("wqxz", PerturbationKind::Rel, polish(), rng);
    REQUIRE_FALSE(miss.success());
    CHECK(*miss.failure == FailureReason::not_in_lexicon);
}

TEST_CASE("Split inserts one interior space") {
    std::set<std::string> seen;
    for (int i = 0; i < 400; ++i) {
        Rng rng(100 + i);
        const auto o = perturb_word("niemu", PerturbationKind::Split, polish(), rng);
        REQUIRE(o.success());
        seen.insert(*o.result);
    }
    // all four interior positions occur, including the Table-style one
    CHECK(seen == std::set<std::string>{"n iemu", "ni emu", "nie mu", "niem u"});

    Rng rng(7);
    const auto short_word = perturb_word("a", PerturbationKind::Split, polish(), rng);
    REQUIRE_FALSE(short_word.success());
    CHECK(*short_word.failure == FailureReason::word_too_short);
}

TEST_CASE("table exemplars are admissible outputs of their kinds") {
    const struct {
        PerturbationKind kind;
        const char* original;
        const char* perturbed;
    } exemplars[] = {
        {PerturbationKind::OCR, "słaba", "sła6a"},
        {PerturbationKind::Key, "polecam", "poleFXm"},
        {PerturbationKind::Split, "niemu", "ni emu"},
        {PerturbationKind::RSw, "zapoznałem", "zapzonałme"},
        {PerturbationKind::RDel, "właściwy", "włściy"},
        {PerturbationKind::Dia, "uwzględnia", "uwzglednia"},
        {PerturbationKind::Ort, "opiekun", "opiekón"},
        {PerturbationKind::Rel, "niniejszy", "następujący"},
        {PerturbationKind::RSub, "jesteście", "jesteśwZe"},
        {PerturbationKind::RIns, "marzenie", "mqarzenJie"},
    };
    for (const auto& e : exemplars) {
        INFO(e.original, " -> ", e.perturbed);
        CHECK(testutil::admissible_output(e.original, e.perturbed, e.kind, polish()));
    }
    // sanity: the checker rejects what the kind cannot produce
    CHECK_FALSE(testutil::admissible_output("słaba", "sła6a", PerturbationKind::Dia, polish()));
    CHECK_FALSE(testutil::admissible_output("kot", "kot", PerturbationKind::RSub, polish()));
    CHECK_FALSE(
        testutil::admissible_output("polecam", "pblecam", PerturbationKind::Key, polish()));
}

TEST_CASE("every generated perturbation is admissible and within budget") {
    const PerturbationKind kinds[] = {
        PerturbationKind::Key, PerturbationKind::OCR,   PerturbationKind::RIns,
        PerturbationKind::RDel, PerturbationKind::RSub, PerturbationKind::RSw,
        PerturbationKind::Dia, PerturbationKind::Split, PerturbationKind::Ort,
    };
    Rng word_rng(771);
    for (PerturbationKind kind : kinds) {
        std::size_t successes = 0;
        for (int it = 0; it < 1200; ++it) {
            const std::string word = random_word(word_rng);
            Rng rng(stable_hash(9000, perturbation_kind_name(kind), static_cast<std::uint64_t>(it)));
            const auto o = perturb_word(word, kind, polish(), rng);
            if (!o.success()) continue;
            ++successes;
            INFO(perturbation_kind_name(kind), ": ", word, " -> ", *o.result);
            CHECK(*o.result != word);
            CHECK(testutil::admissible_output(word, *o.result, kind, polish()));
        }
        INFO(perturbation_kind_name(kind));
        CHECK(successes > 200);  // the property suite must actually exercise the kind
    }
}

TEST_CASE("Rel over the whole lexicon is admissible") {
    Rng rng(17);
    for (const auto& [surface, replacements] : polish().relation_lexicon) {
        (void)replacements;
        const auto o = perturb_word(surface, PerturbationKind::Rel, polish(), rng);
        REQUIRE(o.success());
        CHECK(testutil::admissible_output(surface, *o.result, PerturbationKind::Rel, polish()));
    }
}

TEST_CASE("structural deltas per kind") {
    Rng word_rng(41);
    for (int it = 0; it < 1000; ++it) {
        const std::string word = random_word(word_rng, 2);
        const std::size_t len = scalar_len(word);
        Rng rng(stable_hash(123, static_cast<std::uint64_t>(it)));

        auto rsw = perturb_word(word, PerturbationKind::RSw, polish(), rng);
        if (rsw.success()) {
            CHECK(scalar_multiset(*rsw.result) == scalar_multiset(word));  // multiset conserved
        }
        auto rdel = perturb_word(word, PerturbationKind::RDel, polish(), rng);
        if (rdel.success()) {
            CHECK(scalar_len(*rdel.result) < len);
            CHECK(scalar_len(*rdel.result) >= 1);
        }
        auto rins = perturb_word(word, PerturbationKind::RIns, polish(), rng);
        if (rins.success()) {
            const std::size_t k = scalar_len(*rins.result) - len;
            CHECK(k >= 1);
            CHECK(k <= static_cast<std::size_t>(char_budget_cap(len)));
        }
        auto split = perturb_word(word, PerturbationKind::Split, polish(), rng);
        if (split.success()) {
            const auto& r = *split.result;
            CHECK(scalar_len(r) == len + 1);
            CHECK(std::count(r.begin(), r.end(), ' ') == 1);
        }
        auto dia = perturb_word(word, PerturbationKind::Dia, polish(), rng);
        if (dia.success()) {
            // folded positions carry no foldable scalar anymore
            const auto before = utf8_decode_or_throw(word);
            const auto after = utf8_decode_or_throw(*dia.result);
            for (std::size_t i = 0; i < before.size(); ++i) {
                if (before[i] != after[i]) CHECK_FALSE(polish().diacritic_fold.count(after[i]));
            }
        }
    }
}

TEST_CASE("perturb_example leaves missed words untouched") {
    // target a word with no foldable scalar ("ł" in "słaba" would fold)
    Example ex;
    ex.id = "e1";
    ex.text = "dobra jakość";
    TokenizedText tt;
    tt.words = segment_words(ex.text);
    WordRanking ranking;
    ranking.method = "manual";
    ranking.ranked = {{0, 1.0}};

    const auto pe = perturb_example(ex, tt, ranking, 1, PerturbationKind::Dia, polish(), 5);
    REQUIRE(pe.outcomes.size() == 1);
    CHECK_FALSE(pe.outcomes[0].success());
    CHECK(*pe.outcomes[0].failure == FailureReason::no_applicable_site);
    CHECK(pe.perturbed_text == ex.text);

    // and the fold does fire on "słaba"
    Rng rng(5);
    const auto folded = perturb_word("słaba", PerturbationKind::Dia, polish(), rng);
    REQUIRE(folded.success());
    CHECK(*folded.result == "slaba");
}

TEST_CASE("n beyond the ranking attempts all perturbable words") {
    Example ex;
    ex.id = "e2";
    ex.text = "jeden dwa trzy";
    TokenizedText tt;
    tt.words = segment_words(ex.text);
    WordRanking ranking;
    ranking.method = "manual";
    ranking.ranked = {{0, 3.0}, {1, 2.0}, {2, 1.0}};

    const auto pe = perturb_example(ex, tt, ranking, 50, PerturbationKind::RSub, polish(), 5);
    CHECK(pe.outcomes.size() == 3);
    CHECK(pe.n_requested == 50);
}

TEST_CASE("the n and n+1 suites agree on shared ranks") {
    Rng rng(88);
    for (int it = 0; it < 60; ++it) {
        Example ex;
        ex.id = "ex" + std::to_string(it);
        ex.text = random_word(rng, 3) + " " + random_word(rng, 3) + " " + random_word(rng, 3) +
                  " " + random_word(rng, 3);
        TokenizedText tt;
        tt.words = segment_words(ex.text);
        WordRanking ranking;
        ranking.method = "manual";
        for (std::size_t w = 0; w < tt.words.size(); ++w) {
            if (!tt.words[w].is_punctuation) {
                ranking.ranked.push_back({w, 10.0 - static_cast<double>(w)});
            }
        }
        const auto one = perturb_example(ex, tt, ranking, 1, PerturbationKind::Key, polish(), 7);
        const auto two = perturb_example(ex, tt, ranking, 2, PerturbationKind::Key, polish(), 7);
        REQUIRE(two.outcomes.size() >= one.outcomes.size());
        for (std::size_t i = 0; i < one.outcomes.size(); ++i) {
            CHECK(one.outcomes[i].word_index == two.outcomes[i].word_index);
            CHECK(one.outcomes[i].result == two.outcomes[i].result);
            CHECK(one.outcomes[i].failure == two.outcomes[i].failure);
        }
    }
}

TEST_CASE("perturbed text rebuilds exactly around the replaced spans") {
    Rng rng(91);
    for (int it = 0; it < 200; ++it) {
        Example ex;
        ex.id = "r" + std::to_string(it);
        ex.text = "( " + random_word(rng, 2) + ", " + random_word(rng, 2) + " ) " +
                  random_word(rng, 2) + " .";
        TokenizedText tt;
        tt.words = segment_words(ex.text);
        WordRanking ranking;
        ranking.method = "manual";
        for (std::size_t w = 0; w < tt.words.size(); ++w) {
            if (!tt.words[w].is_punctuation) ranking.ranked.push_back({w, 1.0});
        }
        REQUIRE_FALSE(ranking.ranked.empty());
        const auto pe =
            perturb_example(ex, tt, ranking, 2, PerturbationKind::RIns, polish(), 17);

        // untouched words and all separators/punctuation byte-identical
        std::map<std::size_t, std::string> replaced;
        for (const auto& o : pe.outcomes) {
            if (o.success()) replaced[o.word_index] = *o.result;
        }
        const auto scalars = utf8_decode_or_throw(ex.text);
        std::u32string expected;
        std::size_t cursor = 0;
        for (std::size_t w = 0; w < tt.words.size(); ++w) {
            expected.append(scalars, cursor, tt.words[w].begin - cursor);
            const auto it2 = replaced.find(w);
            expected += utf8_decode_or_throw(it2 == replaced.end() ? tt.words[w].surface
                                                                   : it2->second);
            cursor = tt.words[w].end;
        }
        expected.append(scalars, cursor, scalars.size() - cursor);
        CHECK(pe.perturbed_text == utf8_encode(expected));
        const bool any_success = !replaced.empty();
        CHECK((pe.perturbed_text != ex.text) == any_success);
    }
}

TEST_CASE("generate_suite writes one file per cell plus a manifest") {
    testutil::TempDir tmp("suite");
    const Dataset ds = testutil::trigger_dataset(6, 4);

    RankingSet rankings;
    for (const Example& ex : ds.examples) {
        if (ex.split != Split::test) continue;
        TokenizedText tt;
        tt.words = segment_words(ex.text);
        auto r = random_ranking(tt, stable_hash(1, ex.id));
        r.example_id = ex.id;
        r.method = "random";
        rankings["random"].emplace(ex.id, std::move(r));
    }

    const auto suite_dir = tmp.path() / "suite";
    const auto manifest =
        generate_suite(ds, rankings, {PerturbationKind::RSub, PerturbationKind::Dia}, {1, 2},
                       polish(), 33, suite_dir, 1);
    CHECK(manifest.files.size() == 4);
    for (const auto& f : manifest.files) {
        CHECK(std::filesystem::exists(suite_dir / f.path));
        const auto records = load_suite_file(suite_dir / f.path);
        CHECK(records.size() == 4);
    }
    CHECK(std::filesystem::exists(suite_dir / "manifest.json"));
    CHECK(manifest.resource_checksums.size() == 6);

    // byte-identical rerun, serial and parallel
    const auto suite_dir2 = tmp.path() / "suite2";
    generate_suite(ds, rankings, {PerturbationKind::RSub, PerturbationKind::Dia}, {1, 2},
                   polish(), 33, suite_dir2, 2);
    for (const auto& f : manifest.files) {
        CHECK(testutil::read_file(suite_dir / f.path) == testutil::read_file(suite_dir2 / f.path));
    }
    CHECK(testutil::read_file(suite_dir / "manifest.json") ==
          testutil::read_file(suite_dir2 / "manifest.json"));
}

TEST_CASE("manifest checksums react to resource edits") {
    testutil::TempDir tmp("respack");
    // copy the pack and edit one table
    const auto src = std::filesystem::path(TEXTROBUST_SOURCE_DIR) / "resources/polish";
    for (const auto& entry : std::filesystem::directory_iterator(src)) {
        std::filesystem::copy_file(entry.path(), tmp.path() / entry.path().filename());
    }
    const LanguageResources before = load_resources(tmp.path() / "pack.json");
    auto ocr = testutil::read_file(tmp.path() / "ocr_confusions.json");
    testutil::write_file(tmp.path() / "ocr_confusions.json",
                         ocr.substr(0, ocr.rfind('}')) + ",\"w\":\"v\"}");
    const LanguageResources after = load_resources(tmp.path() / "pack.json");
    CHECK(before.file_checksums.at("ocr_confusions") != after.file_checksums.at("ocr_confusions"));
    CHECK(before.file_checksums.at("alphabet") == after.file_checksums.at("alphabet"));
}

TEST_CASE("missing rankings are a hard error") {
    const Dataset ds = testutil::trigger_dataset(6, 4);
    RankingSet rankings;
    rankings["random"] = {};
    testutil::TempDir tmp("suite");
    CHECK_THROWS_WITH_AS(
        generate_suite(ds, rankings, {PerturbationKind::RSub}, {1}, polish(), 1,
                       tmp.path() / "s", 1),
        doctest::Contains("missing ranking"), std::runtime_error);
}

TEST_CASE("resource invariants are enforced") {
    LanguageResources res = polish();
    res.diacritic_fold[U'a'] = U'x';  // 'a' is a fold value elsewhere
    CHECK_THROWS_AS(res.validate(), std::runtime_error);

    LanguageResources empty;
    CHECK_THROWS_AS(empty.require_kind(PerturbationKind::Key), std::runtime_error);
    CHECK_THROWS_AS(empty.require_kind(PerturbationKind::Rel), std::runtime_error);
}
