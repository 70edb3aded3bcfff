#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "textrobust/corpus.hpp"
#include "textrobust/matrix.hpp"

namespace textrobust {

enum class Pooling { mean, attentive };

const char* pooling_name(Pooling p);
std::optional<Pooling> parse_pooling(const std::string& s);

struct ModelConfig {
    std::size_t embedding_dim = 16;
    Pooling pooling = Pooling::mean;
    int num_classes = 2;
    std::uint32_t vocab_size = 0;  // embedding rows, filled from the vocabulary
    double learning_rate = 0.5;
    int epochs = 20;
    int batch_size = 16;
    int early_stop_patience = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct MetricsResult {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::optional<double> macro_auroc;
};

struct TrainReport {
    std::vector<double> train_loss;    // one entry per epoch actually run
    std::vector<double> val_accuracy;  // same length
    std::vector<double> val_macro_f1;  // same length
    int stopping_epoch = 0;            // 1-based; last epoch that ran
    int best_epoch = 0;                // 1-based; epoch whose weights were restored
    MetricsResult test_metrics;
};

// Pooling-layer outputs for one input.
struct PoolForward {
    std::vector<double> attention;  // n entries for attentive pooling, empty for mean
    std::vector<double> pooled;     // d
    std::vector<double> logits;     // C
    std::vector<double> probabilities;  // C, sums to 1
};

struct ForwardResult : PoolForward {
    Matrix embeddings;  // n x d, one row per subtoken
};

std::vector<double> softmax(const std::vector<double>& logits);

// Embedding table + {mean | single-head attentive} pooling + linear head.
// Immutable once trained; forward/gradient calls are reentrant.
class ProxyModel {
public:
    ModelConfig config;
    Vocabulary vocab;
    Matrix embedding;                  // V x d
    std::vector<double> attn_key;      // d, attentive pooling only
    std::vector<double> attn_query;    // d
    Matrix classifier_w;               // C x d
    std::vector<double> classifier_b;  // C

    std::size_t dim() const { return config.embedding_dim; }
    int num_classes() const { return config.num_classes; }

    Matrix gather_embeddings(const TokenizedText& tokens) const;

    ForwardResult forward(const TokenizedText& tokens) const;

    // Core path shared by every attribution method: rows(i) must return a
    // pointer to the d-vector standing in for subtoken i's embedding.
    template <typename RowFn>
    PoolForward forward_rows(std::size_t n, RowFn&& rows) const;

    PoolForward forward_embeddings(const Matrix& emb) const;

    // Analytic gradient of the target-class logit w.r.t. each embedding row.
    Matrix grad_wrt_embeddings(const TokenizedText& tokens, int target_class) const;
    Matrix grad_embeddings(const Matrix& emb, int target_class) const;

    // Gradient of the target-class logit w.r.t. the attention weights
    // (attentive pooling; treats the weights as free variables).
    std::vector<double> grad_wrt_attention(const Matrix& emb, int target_class) const;

    int predict_label(const TokenizedText& tokens) const;
    int predict_label(const std::string& text) const;

    void save(const std::filesystem::path& path) const;
    static ProxyModel load(const std::filesystem::path& path);
};

// Mini-batch SGD with softmax cross-entropy; deterministic given
// config.seed. Early-stops on validation accuracy and restores the best
// epoch's parameters. When the dataset has no validation split, the last
// 10% of the train split (by id order) is carved out.
std::pair<ProxyModel, TrainReport> train(const Dataset& dataset, const Vocabulary& vocab,
                                         ModelConfig config);

// accuracy, macro-F1 and macro one-vs-rest AUROC (rank statistic, ties
// counted half) over one split. Classes absent from the split are excluded
// from the macro averages with a warning.
MetricsResult evaluate_metrics(const ProxyModel& model, const Dataset& dataset, Split split);

// Shared by evaluate_metrics and the evaluation harness: metrics from
// per-example (label, prediction, per-class score) triples. scores may be
// empty when the target does not expose probabilities.
MetricsResult metrics_from_predictions(const std::vector<int>& labels,
                                       const std::vector<int>& predictions,
                                       const std::vector<std::vector<double>>& scores,
                                       int num_classes);

template <typename RowFn>
PoolForward ProxyModel::forward_rows(std::size_t n, RowFn&& rows) const {
    const std::size_t d = dim();
    PoolForward out;
    out.pooled.assign(d, 0.0);
    if (config.pooling == Pooling::mean) {
        for (std::size_t t = 0; t < n; ++t) {
            const double* e = rows(t);
            for (std::size_t j = 0; j < d; ++j) out.pooled[j] += e[j];
        }
        for (std::size_t j = 0; j < d; ++j) out.pooled[j] /= static_cast<double>(n);
    } else {
        // score_t = (e_t ⊙ key) · query, attention = softmax(score)
        std::vector<double> scores(n, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double* e = rows(t);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += e[j] * attn_key[j] * attn_query[j];
            scores[t] = s;
        }
        out.attention = softmax(scores);
        for (std::size_t t = 0; t < n; ++t) {
            const double* e = rows(t);
            for (std::size_t j = 0; j < d; ++j) out.pooled[j] += out.attention[t] * e[j];
        }
    }
    const int c_count = num_classes();
    out.logits.assign(c_count, 0.0);
    for (int c = 0; c < c_count; ++c) {
        out.logits[c] = classifier_b[c] + dot(classifier_w.row(c), out.pooled.data(), d);
    }
    out.probabilities = softmax(out.logits);
    return out;
}

}  // namespace textrobust
