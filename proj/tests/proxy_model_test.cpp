#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/test_util.hpp"
#include "textrobust/hashing.hpp"
#include "textrobust/proxy_model.hpp"
#include "textrobust/rng.hpp"

using namespace textrobust;

namespace {

// central finite differences on the target logit, h = 1e-4
Matrix finite_difference_grad(const ProxyModel& m, const Matrix& emb, int target, double h = 1e-4) {
    Matrix grad(emb.rows, emb.cols);
    Matrix probe = emb;
    for (std::size_t t = 0; t < emb.rows; ++t) {
        for (std::size_t j = 0; j < emb.cols; ++j) {
            const double keep = probe.at(t, j);
            probe.at(t, j) = keep + h;
            const double up = m.forward_embeddings(probe).logits[target];
            probe.at(t, j) = keep - h;
            const double down = m.forward_embeddings(probe).logits[target];
            probe.at(t, j) = keep;
            grad.at(t, j) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

double max_rel_error(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double denom = std::max({std::fabs(a.data[i]), std::fabs(b.data[i]), 1e-8});
        worst = std::max(worst, std::fabs(a.data[i] - b.data[i]) / denom);
    }
    return worst;
}

TokenizedText tokens_with_ids(const std::vector<std::uint32_t>& ids) {
    TokenizedText tt;
    tt.words.push_back({"w", 0, 1, false});
    for (std::uint32_t id : ids) tt.subtokens.push_back({"p", 0, id});
    return tt;
}

}  // namespace

TEST_CASE("forward with one subtoken pools that embedding") {
    const auto m = testutil::random_model(5, 6, 3, Pooling::mean);
    const auto tt = tokens_with_ids({7});
    const auto f = m.forward(tt);
    for (std::size_t j = 0; j < m.dim(); ++j) {
        CHECK(f.pooled[j] == doctest::Approx(m.embedding.at(7, j)).epsilon(1e-12));
    }
}

TEST_CASE("forward probabilities form a simplex") {
    for (auto pooling : {Pooling::mean, Pooling::attentive}) {
        const auto m = testutil::random_model(11, 8, 4, pooling);
        Rng rng(21);
        for (int it = 0; it < 50; ++it) {
            std::vector<std::uint32_t> ids;
            const std::size_t n = 1 + rng.uniform(12);
            for (std::size_t i = 0; i < n; ++i) {
                ids.push_back(static_cast<std::uint32_t>(rng.uniform(64)));
            }
            const auto f = m.forward(tokens_with_ids(ids));
            double sum = 0.0;
            for (double p : f.probabilities) {
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("attentive attention weights sum to one") {
    const auto m = testutil::random_model(13, 8, 2, Pooling::attentive);
    const auto f = m.forward(tokens_with_ids({1, 5, 9, 30}));
    REQUIRE(f.attention.size() == 4);
    double sum = 0.0;
    for (double a : f.attention) sum += a;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
}

TEST_CASE("duplicating the single subtoken leaves mean-pooled logits unchanged") {
    const auto m = testutil::random_model(7, 6, 3, Pooling::mean);
    const auto once = m.forward(tokens_with_ids({12}));
    const auto twice = m.forward(tokens_with_ids({12, 12}));
    for (int c = 0; c < 3; ++c) {
        CHECK(once.logits[c] == doctest::Approx(twice.logits[c]).epsilon(1e-12));
    }
}

TEST_CASE("forward rejects zero subtokens") {
    const auto m = testutil::random_model(3, 4, 2, Pooling::mean);
    TokenizedText tt;
    CHECK_THROWS_AS(m.forward(tt), std::invalid_argument);
}

TEST_CASE("mean-pooling gradient rows equal W[target]/n") {
    const auto m = testutil::random_model(19, 6, 3, Pooling::mean);
    const auto tt = tokens_with_ids({2, 9, 44, 17});
    const Matrix g = m.grad_wrt_embeddings(tt, 1);
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t j = 0; j < m.dim(); ++j) {
            CHECK(g.at(t, j) == doctest::Approx(m.classifier_w.at(1, j) / 4.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng(4242);
    for (int it = 0; it < 10; ++it) {
        const auto pooling = it % 2 == 0 ? Pooling::mean : Pooling::attentive;
        const auto m = testutil::random_model(100 + it, 6, 3, pooling);
        std::vector<std::uint32_t> ids;
        const std::size_t n = 1 + rng.uniform(8);
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back(static_cast<std::uint32_t>(rng.uniform(64)));
        }
        const auto tt = tokens_with_ids(ids);
        const int target = static_cast<int>(rng.uniform(3));
        const Matrix emb = m.gather_embeddings(tt);
        const Matrix analytic = m.grad_wrt_embeddings(tt, target);
        const Matrix numeric = finite_difference_grad(m, emb, target);
        CHECK(max_rel_error(analytic, numeric) <= 1e-4);
    }
}

TEST_CASE("attentive gradient rows coincide for identical embeddings") {
    auto m = testutil::random_model(31, 6, 2, Pooling::attentive);
    const auto tt = tokens_with_ids({3, 3, 3});
    const Matrix g = m.grad_wrt_embeddings(tt, 0);
    for (std::size_t t = 1; t < 3; ++t) {
        for (std::size_t j = 0; j < m.dim(); ++j) {
            CHECK(g.at(t, j) == doctest::Approx(g.at(0, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("mean-pooling logits are linear in a single embedding row") {
    // 3-point collinearity along a random direction
    const auto m = testutil::random_model(47, 6, 3, Pooling::mean);
    const auto tt = tokens_with_ids({1, 2, 3});
    Matrix emb = m.gather_embeddings(tt);
    Rng rng(7);
    std::vector<double> direction(m.dim());
    for (double& d : direction) d = rng.normal();

    auto logit_at = [&](double alpha) {
        Matrix probe = emb;
        for (std::size_t j = 0; j < m.dim(); ++j) probe.at(1, j) += alpha * direction[j];
        return m.forward_embeddings(probe).logits[2];
    };
    const double l0 = logit_at(0.0), l1 = logit_at(0.5), l2 = logit_at(1.0);
    CHECK(std::fabs(l1 - 0.5 * (l0 + l2)) <= 1e-9);
}

TEST_CASE("training separates the trigger dataset") {
    const Dataset ds = testutil::trigger_dataset(500, 120);

    // independent oracle first: the dataset is learnable by construction
    const double bow_acc = testutil::bow_logistic_test_accuracy(ds);
    REQUIRE(bow_acc >= 0.95);

    const Vocabulary vocab = build_vocabulary(ds, 512, 256);
    ModelConfig config;
    config.embedding_dim = 12;
    config.learning_rate = 1.0;
    config.epochs = 30;
    config.early_stop_patience = 6;
    config.seed = 9;
    const auto [model, report] = train(ds, vocab, config);
    CHECK(report.test_metrics.accuracy >= 0.95);
    CHECK(report.stopping_epoch <= 30);
    for (double loss : report.train_loss) CHECK(std::isfinite(loss));
}

TEST_CASE("epochs=1 with patience=1 stops at epoch 1") {
    const Dataset ds = testutil::trigger_dataset(60, 20);
    const Vocabulary vocab = build_vocabulary(ds, 256, 128);
    ModelConfig config;
    config.epochs = 1;
    config.early_stop_patience = 1;
    config.seed = 5;
    const auto [model, report] = train(ds, vocab, config);
    CHECK(report.stopping_epoch == 1);
}

TEST_CASE("training twice with the same seed is bit-identical") {
    const Dataset ds = testutil::trigger_dataset(80, 20);
    const Vocabulary vocab = build_vocabulary(ds, 256, 128);
    ModelConfig config;
    config.epochs = 4;
    config.seed = 77;
    const auto [a, ra] = train(ds, vocab, config);
    const auto [b, rb] = train(ds, vocab, config);
    CHECK(a.embedding.data == b.embedding.data);
    CHECK(a.classifier_w.data == b.classifier_w.data);
    CHECK(a.classifier_b == b.classifier_b);
    CHECK(ra.train_loss == rb.train_loss);
}

TEST_CASE("attentive pooling trains too") {
    const Dataset ds = testutil::trigger_dataset(200, 60);
    const Vocabulary vocab = build_vocabulary(ds, 512, 128);
    ModelConfig config;
    config.pooling = Pooling::attentive;
    config.embedding_dim = 12;
    config.learning_rate = 1.0;
    config.epochs = 30;
    config.early_stop_patience = 6;
    config.seed = 13;
    const auto [model, report] = train(ds, vocab, config);
    CHECK(report.test_metrics.accuracy >= 0.9);
}

TEST_CASE("empty train split is an error") {
    Dataset ds = testutil::trigger_dataset(10, 5);
    for (auto& ex : ds.examples) ex.split = Split::test;
    const Vocabulary vocab({}, 64);
    CHECK_THROWS_AS(train(ds, vocab, ModelConfig{}), std::runtime_error);
}

TEST_CASE("predict_label breaks probability ties toward class 0") {
    auto m = testutil::random_model(1, 4, 2, Pooling::mean);
    // force symmetric logits
    for (std::size_t j = 0; j < m.dim(); ++j) {
        m.classifier_w.at(0, j) = 0.0;
        m.classifier_w.at(1, j) = 0.0;
    }
    m.classifier_b = {0.25, 0.25};
    CHECK(m.predict_label(tokens_with_ids({5})) == 0);
}

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
    testutil::TempDir tmp("ckpt");
    const Dataset ds = testutil::trigger_dataset(60, 20);
    const Vocabulary vocab = build_vocabulary(ds, 256, 64);
    ModelConfig config;
    config.epochs = 2;
    config.pooling = Pooling::attentive;
    config.seed = 3;
    const auto [model, report] = train(ds, vocab, config);

    const auto path = tmp.path() / "model.pbm";
    model.save(path);
    const ProxyModel loaded = ProxyModel::load(path);

    CHECK(loaded.embedding.data == model.embedding.data);
    CHECK(loaded.attn_key == model.attn_key);
    CHECK(loaded.classifier_w.data == model.classifier_w.data);
    CHECK(loaded.vocab.pieces() == model.vocab.pieces());

    const auto tt = tokenize("znakomity dom kot", model.vocab);
    CHECK(model.forward(tt).logits == loaded.forward(tt).logits);
}

TEST_CASE("corrupt checkpoints are rejected") {
    testutil::TempDir tmp("ckpt");
    const auto garbage = tmp.path() / "bad.pbm";
    testutil::write_file(garbage, "not a checkpoint at all");
    CHECK_THROWS_AS(ProxyModel::load(garbage), std::runtime_error);

    // truncated parameter block
    const auto m = testutil::random_model(2, 4, 2, Pooling::mean, 8);
    const auto path = tmp.path() / "model.pbm";
    m.save(path);
    const std::string full = testutil::read_file(path);
    testutil::write_file(path, full.substr(0, full.size() - 64));
    try {
        ProxyModel::load(path);
        FAIL("expected truncation error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
}

TEST_CASE("metrics on perfect and degenerate predictions") {
    const std::vector<int> labels = {0, 1, 0, 1};
    const auto perfect = metrics_from_predictions(labels, labels, {}, 2);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);

    const std::vector<int> all_zero = {0, 0, 0, 0};
    const auto degenerate = metrics_from_predictions(labels, all_zero, {}, 2);
    CHECK(degenerate.accuracy == 0.5);
}

TEST_CASE("AUROC matches the enumerated 4-example case") {
    // scores {0.9+, 0.8-, 0.7+, 0.1-}: 3 of 4 positive-negative pairs won
    const std::vector<int> labels = {1, 0, 1, 0};
    const std::vector<int> preds = {1, 1, 1, 0};
    const std::vector<std::vector<double>> scores = {
        {0.1, 0.9}, {0.2, 0.8}, {0.3, 0.7}, {0.9, 0.1}};
    const auto m = metrics_from_predictions(labels, preds, scores, 2);
    REQUIRE(m.macro_auroc.has_value());
    CHECK(*m.macro_auroc == doctest::Approx(0.75).epsilon(1e-12));

    // brute-force pair counting oracle over random tables, ties included
    Rng rng(404);
    for (int it = 0; it < 40; ++it) {
        const std::size_t n = 4 + rng.uniform(40);
        std::vector<int> ls(n);
        std::vector<std::vector<double>> sc(n);
        bool has_both = false;
        for (std::size_t i = 0; i < n; ++i) {
            ls[i] = static_cast<int>(rng.uniform(2));
            const double s = std::round(rng.uniform_real() * 8.0) / 8.0;  // force ties
            sc[i] = {1.0 - s, s};
        }
        int pos = 0;
        for (int l : ls) pos += l;
        has_both = pos > 0 && pos < static_cast<int>(n);
        if (!has_both) continue;

        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (ls[i] != 1 || ls[j] != 0) continue;
                ++pairs;
                if (sc[i][1] > sc[j][1]) wins += 1.0;
                else if (sc[i][1] == sc[j][1]) wins += 0.5;
            }
        }
        const double expected_pos_auroc = wins / static_cast<double>(pairs);

        // class-0 one-vs-rest is symmetric, so macro = mean of the two
        double wins0 = 0.0;
        std::size_t pairs0 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (ls[i] != 0 || ls[j] != 1) continue;
                ++pairs0;
                if (sc[i][0] > sc[j][0]) wins0 += 1.0;
                else if (sc[i][0] == sc[j][0]) wins0 += 0.5;
            }
        }
        const double expected_macro = 0.5 * (expected_pos_auroc + wins0 / pairs0);

        std::vector<int> dummy_preds(n, 0);
        const auto got = metrics_from_predictions(ls, dummy_preds, sc, 2);
        REQUIRE(got.macro_auroc.has_value());
        CHECK(*got.macro_auroc == doctest::Approx(expected_macro).epsilon(1e-9));
    }
}

TEST_CASE("a class absent from the split is excluded from macro averages") {
    const std::vector<int> labels = {0, 0, 1, 1};
    const std::vector<int> preds = {0, 0, 1, 1};
    const auto m = metrics_from_predictions(labels, preds, {}, 3);  // class 2 absent
    CHECK(m.macro_f1 == 1.0);
}
