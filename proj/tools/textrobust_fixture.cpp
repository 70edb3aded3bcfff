// Generates the synthetic Polish-flavored sentiment dataset used by the
// example config and the test suites: the label is carried entirely by a
// few sentiment-bearing words per sentence, so a bag-of-words model is
// known to separate it and targeted perturbations have a clear signal to
// destroy.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "textrobust/hashing.hpp"
#include "textrobust/rng.hpp"

namespace {

using textrobust::Rng;

const std::vector<std::string> kNeutral = {
    "hotel",     "pokój",      "obsługa",   "bardzo",   "dość",       "jednak",
    "wczoraj",   "dzisiaj",    "produkt",   "przesyłka", "zamówienie", "sklep",
    "cena",      "jakość",     "czas",      "dostawa",  "kontakt",    "opis",
    "tydzień",   "miesiąc",    "rano",      "wieczorem", "znowu",      "trochę",
    "całkiem",   "raczej",     "okolica",   "budynek",  "personel",   "śniadanie",
    "łazienka",  "widok",      "parking",   "telefon",  "ekran",      "bateria",
};

// strong triggers: the decisive words for the label
const std::vector<std::string> kPositive = {
    "świetny", "doskonały", "wspaniały", "rewelacyjny", "znakomity", "polecam", "super",
};

const std::vector<std::string> kNegative = {
    "fatalny", "okropny", "tragiczny", "beznadziejny", "koszmarny", "odradzam", "słaby",
};

// weak polarity-leaning words: distribute label signal across the
// sentence so the attack surface is wider than the triggers alone
const std::vector<std::string> kWeakPositive = {
    "miło",  "sprawnie", "czysto", "wygodnie", "uprzejmie", "solidnie", "elegancko", "uśmiech",
};

const std::vector<std::string> kWeakNegative = {
    "brudno", "wolno", "hałas", "problem", "opóźnienie", "zepsute", "chaos", "bałagan",
};

std::string make_text(Rng& rng, int polarity) {
    const std::size_t length = 9 + rng.uniform(5);        // 9..13 words
    const std::size_t signal_count = 1 + rng.uniform(3);  // 1..3 trigger words
    const auto signal_positions = rng.sample_indices(length, signal_count);

    const auto& triggers = polarity == 1 ? kPositive : kNegative;
    const auto& weak = polarity == 1 ? kWeakPositive : kWeakNegative;
    std::vector<std::string> words(length);
    std::size_t next_signal = 0;
    for (std::size_t i = 0; i < length; ++i) {
        if (next_signal < signal_positions.size() && signal_positions[next_signal] == i) {
            words[i] = triggers[rng.uniform(triggers.size())];
            ++next_signal;
        } else if (rng.coin()) {
            words[i] = weak[rng.uniform(weak.size())];
        } else {
            words[i] = kNeutral[rng.uniform(kNeutral.size())];
        }
    }
    if (rng.uniform_real() < 0.3) {
        words[rng.uniform(length - 1)] += ",";
    }
    std::string text;
    for (std::size_t i = 0; i < length; ++i) {
        if (i > 0) text += ' ';
        text += words[i];
    }
    const double tail = rng.uniform_real();
    if (tail < 0.7) {
        text += " .";
    } else if (tail < 0.8) {
        text += " !";
    }
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic sentiment fixture dataset"};
    std::string out_path = "polish_sentiment_synth.jsonl";
    int n_train = 500;
    int n_test = 500;
    std::uint64_t seed = 7;
    app.add_option("-o,--out", out_path, "output JSON-Lines path");
    app.add_option("--train", n_train, "number of train examples");
    app.add_option("--test", n_test, "number of test examples");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
        return 2;
    }
    out << nlohmann::json{{"label_names", {"negatywna", "pozytywna"}}}.dump() << "\n";

    const int total = n_train + n_test;
    for (int i = 0; i < total; ++i) {
        Rng rng(textrobust::stable_hash(seed, "example", static_cast<std::uint64_t>(i)));
        const int polarity = static_cast<int>(rng.uniform(2));
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%04d", i);
        const nlohmann::json j{{"id", id},
                               {"text", make_text(rng, polarity)},
                               {"label", polarity},
                               {"split", i < n_train ? "train" : "test"}};
        out << j.dump() << "\n";
    }
    return 0;
}
