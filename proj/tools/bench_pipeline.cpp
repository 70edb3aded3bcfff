// Serial-vs-OpenMP benchmark for the per-example kernels (attribution +
// ranking, suite generation). threads=1 is the reference path the tests
// compare against; this target measures what the parallel lane buys.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "textrobust/attribution.hpp"
#include "textrobust/corpus.hpp"
#include "textrobust/hashing.hpp"
#include "textrobust/parallel.hpp"
#include "textrobust/perturbation.hpp"
#include "textrobust/proxy_model.hpp"
#include "textrobust/word_importance.hpp"

namespace {

using namespace textrobust;

struct Workload {
    Dataset dataset;
    ProxyModel model;
    std::vector<const Example*> test;
    std::vector<TokenizedText> tokens;
    LanguageResources resources;

    Workload() {
        dataset = load_dataset(std::string(TEXTROBUST_SOURCE_DIR) +
                               "/data/fixtures/polish_sentiment_synth.jsonl");
        const Vocabulary vocab = build_vocabulary(dataset, 2048, 1024);
        ModelConfig config;
        config.embedding_dim = 16;
        config.epochs = 3;
        config.seed = 11;
        model = train(dataset, vocab, config).first;
        test = dataset.split_examples(Split::test);
        test.resize(64);
        tokens.reserve(test.size());
        for (const Example* e : test) tokens.push_back(tokenize(e->text, model.vocab));
        resources = load_resources(std::string(TEXTROBUST_SOURCE_DIR) +
                                   "/resources/polish/pack.json");
    }
};

Workload& workload() {
    static Workload w;
    return w;
}

void rank_kernel(int threads) {
    Workload& w = workload();
    AttributionMethod method;
    method.kind = AttributionKind::kernel_shap;
    std::vector<WordRanking> rankings(w.test.size());
    parallel_for(w.test.size(), threads, [&](std::size_t i) {
        const int target = w.model.predict_label(w.tokens[i]);
        const auto attr = attribute(w.model, w.tokens[i], method, target,
                                    stable_hash(1, "bench", w.test[i]->id));
        rankings[i] = aggregate(w.tokens[i], attr);
    });
    benchmark::DoNotOptimize(rankings);
}

void perturb_kernel(int threads) {
    Workload& w = workload();
    std::vector<PerturbedExample> out(w.test.size());
    parallel_for(w.test.size(), threads, [&](std::size_t i) {
        const auto ranking = random_ranking(w.tokens[i], stable_hash(2, w.test[i]->id));
        out[i] = perturb_example(*w.test[i], w.tokens[i], ranking, 5, PerturbationKind::RSub,
                                 w.resources, 3);
    });
    benchmark::DoNotOptimize(out);
}

void BM_rank_serial(benchmark::State& state) {
    for (auto _ : state) rank_kernel(1);
}

void BM_rank_openmp(benchmark::State& state) {
    for (auto _ : state) rank_kernel(0);  // hardware default
}

void BM_perturb_serial(benchmark::State& state) {
    for (auto _ : state) perturb_kernel(1);
}

void BM_perturb_openmp(benchmark::State& state) {
    for (auto _ : state) perturb_kernel(0);
}

BENCHMARK(BM_rank_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rank_openmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_perturb_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_perturb_openmp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
