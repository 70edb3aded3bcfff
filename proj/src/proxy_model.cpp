#include "textrobust/proxy_model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "textrobust/hashing.hpp"
#include "textrobust/logging.hpp"
#include "textrobust/rng.hpp"

namespace textrobust {

using nlohmann::json;

const char* pooling_name(Pooling p) { return p == Pooling::mean ? "mean" : "attentive"; }

std::optional<Pooling> parse_pooling(const std::string& s) {
    if (s == "mean") return Pooling::mean;
    if (s == "attentive") return Pooling::attentive;
    return std::nullopt;
}

void ModelConfig::validate() const {
    if (embedding_dim < 2) throw std::invalid_argument("model config: embedding_dim must be >= 2");
    if (num_classes < 2) throw std::invalid_argument("model config: num_classes must be >= 2");
    if (epochs < 1) throw std::invalid_argument("model config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("model config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("model config: learning_rate must be positive");
    if (early_stop_patience < 1) throw std::invalid_argument("model config: early_stop_patience must be >= 1");
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

Matrix ProxyModel::gather_embeddings(const TokenizedText& tokens) const {
    const std::size_t n = tokens.subtokens.size();
    Matrix emb(n, dim());
    for (std::size_t t = 0; t < n; ++t) {
        const std::uint32_t id = tokens.subtokens[t].vocab_id;
        if (id >= embedding.rows) {
            throw std::out_of_range("subtoken vocab id " + std::to_string(id) +
                                    " outside embedding table");
        }
        std::memcpy(emb.row(t), embedding.row(id), dim() * sizeof(double));
    }
    return emb;
}

PoolForward ProxyModel::forward_embeddings(const Matrix& emb) const {
    if (emb.rows == 0) throw std::invalid_argument("forward: zero subtokens");
    return forward_rows(emb.rows, [&](std::size_t t) { return emb.row(t); });
}

ForwardResult ProxyModel::forward(const TokenizedText& tokens) const {
    if (tokens.subtokens.empty()) throw std::invalid_argument("forward: zero subtokens");
    ForwardResult res;
    res.embeddings = gather_embeddings(tokens);
    static_cast<PoolForward&>(res) = forward_embeddings(res.embeddings);
    return res;
}

Matrix ProxyModel::grad_embeddings(const Matrix& emb, int target_class) const {
    if (target_class < 0 || target_class >= num_classes()) {
        throw std::out_of_range("grad: invalid class index " + std::to_string(target_class));
    }
    const std::size_t n = emb.rows;
    const std::size_t d = dim();
    Matrix grad(n, d);
    const double* w = classifier_w.row(target_class);

    if (config.pooling == Pooling::mean) {
        // logit = w · mean(e) + b, so every row is w / n
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t j = 0; j < d; ++j) grad.at(t, j) = w[j] / static_cast<double>(n);
        }
        return grad;
    }

    // attentive: grad_t = a_t * (w + (w·e_t - w·pooled) * (key ⊙ query))
    const PoolForward f = forward_embeddings(emb);
    const double w_pooled = dot(w, f.pooled.data(), d);
    std::vector<double> kq(d);
    for (std::size_t j = 0; j < d; ++j) kq[j] = attn_key[j] * attn_query[j];
    for (std::size_t t = 0; t < n; ++t) {
        const double w_et = dot(w, emb.row(t), d);
        const double a = f.attention[t];
        for (std::size_t j = 0; j < d; ++j) {
            grad.at(t, j) = a * (w[j] + (w_et - w_pooled) * kq[j]);
        }
    }
    return grad;
}

Matrix ProxyModel::grad_wrt_embeddings(const TokenizedText& tokens, int target_class) const {
    return grad_embeddings(gather_embeddings(tokens), target_class);
}

std::vector<double> ProxyModel::grad_wrt_attention(const Matrix& emb, int target_class) const {
    if (config.pooling != Pooling::attentive) {
        throw std::logic_error("grad_wrt_attention requires attentive pooling");
    }
    const double* w = classifier_w.row(target_class);
    std::vector<double> out(emb.rows);
    for (std::size_t t = 0; t < emb.rows; ++t) out[t] = dot(w, emb.row(t), dim());
    return out;
}

int ProxyModel::predict_label(const TokenizedText& tokens) const {
    const auto probs = forward(tokens).probabilities;
    // ties go to the lowest class index
    int best = 0;
    for (int c = 1; c < num_classes(); ++c) {
        if (probs[c] > probs[best]) best = c;
    }
    return best;
}

int ProxyModel::predict_label(const std::string& text) const {
    return predict_label(tokenize(text, vocab));
}

namespace {

// ---- training ----------------------------------------------------------

struct TrainState {
    Matrix embedding;
    std::vector<double> attn_key;
    std::vector<double> attn_query;
    Matrix classifier_w;
    std::vector<double> classifier_b;
};

TrainState snapshot(const ProxyModel& m) {
    return {m.embedding, m.attn_key, m.attn_query, m.classifier_w, m.classifier_b};
}

void restore(ProxyModel& m, const TrainState& s) {
    m.embedding = s.embedding;
    m.attn_key = s.attn_key;
    m.attn_query = s.attn_query;
    m.classifier_w = s.classifier_w;
    m.classifier_b = s.classifier_b;
}

struct TokenizedExample {
    const Example* example;
    TokenizedText tokens;
};

// Backprop for one example; accumulates parameter gradients scaled by 1/batch.
void accumulate_gradients(const ProxyModel& m, const TokenizedText& tokens, int label,
                          double scale, TrainState& g, double& loss_out) {
    const std::size_t d = m.dim();
    const int c_count = m.num_classes();
    const Matrix emb = m.gather_embeddings(tokens);
    const std::size_t n = emb.rows;
    const PoolForward f = m.forward_embeddings(emb);

    loss_out += -std::log(std::max(f.probabilities[label], 1e-300)) * scale;

    // dL/dlogit = p - onehot
    std::vector<double> dlogits(f.probabilities);
    dlogits[label] -= 1.0;

    std::vector<double> dpooled(d, 0.0);
    for (int c = 0; c < c_count; ++c) {
        const double dc = dlogits[c] * scale;
        const double* pw = m.classifier_w.row(c);
        double* gw = g.classifier_w.row(c);
        for (std::size_t j = 0; j < d; ++j) {
            gw[j] += dc * f.pooled[j];
            dpooled[j] += dlogits[c] * pw[j];
        }
        g.classifier_b[c] += dc;
    }

    if (m.config.pooling == Pooling::mean) {
        for (std::size_t t = 0; t < n; ++t) {
            double* ge = g.embedding.row(tokens.subtokens[t].vocab_id);
            for (std::size_t j = 0; j < d; ++j) {
                ge[j] += scale * dpooled[j] / static_cast<double>(n);
            }
        }
        return;
    }

    // attentive pooling backprop
    std::vector<double> datt(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) datt[t] = dot(dpooled.data(), emb.row(t), d);
    double att_dot = 0.0;
    for (std::size_t t = 0; t < n; ++t) att_dot += f.attention[t] * datt[t];
    std::vector<double> dscore(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) dscore[t] = f.attention[t] * (datt[t] - att_dot);

    for (std::size_t t = 0; t < n; ++t) {
        const double* e = emb.row(t);
        double* ge = g.embedding.row(tokens.subtokens[t].vocab_id);
        for (std::size_t j = 0; j < d; ++j) {
            const double kq = m.attn_key[j] * m.attn_query[j];
            ge[j] += scale * (f.attention[t] * dpooled[j] + dscore[t] * kq);
            g.attn_key[j] += scale * dscore[t] * e[j] * m.attn_query[j];
            g.attn_query[j] += scale * dscore[t] * e[j] * m.attn_key[j];
        }
    }
}

MetricsResult split_metrics(const ProxyModel& m, const std::vector<TokenizedExample>& exs) {
    std::vector<int> labels, preds;
    for (const auto& te : exs) {
        labels.push_back(te.example->label);
        preds.push_back(m.predict_label(te.tokens));
    }
    return metrics_from_predictions(labels, preds, {}, m.num_classes());
}

}  // namespace

std::pair<ProxyModel, TrainReport> train(const Dataset& dataset, const Vocabulary& vocab,
                                         ModelConfig config) {
    config.num_classes = dataset.num_classes();
    config.vocab_size = vocab.table_size();
    config.validate();

    auto train_ptrs = dataset.split_examples(Split::train);
    if (train_ptrs.empty()) throw std::runtime_error("train: empty train split");
    auto val_ptrs = dataset.split_examples(Split::validation);
    if (val_ptrs.empty()) {
        // deterministic carve-out: last 10% of train by id order
        std::sort(train_ptrs.begin(), train_ptrs.end(),
                  [](const Example* a, const Example* b) { return a->id < b->id; });
        const std::size_t carve = std::max<std::size_t>(1, train_ptrs.size() / 10);
        val_ptrs.assign(train_ptrs.end() - carve, train_ptrs.end());
        train_ptrs.resize(train_ptrs.size() - carve);
        if (train_ptrs.empty()) throw std::runtime_error("train: empty train split after carve-out");
    }

    auto tokenize_all = [&](const std::vector<const Example*>& ptrs) {
        std::vector<TokenizedExample> out;
        out.reserve(ptrs.size());
        for (const Example* e : ptrs) out.push_back({e, tokenize(e->text, vocab)});
        return out;
    };
    const auto train_set = tokenize_all(train_ptrs);
    const auto val_set = tokenize_all(val_ptrs);

    ProxyModel model;
    model.config = config;
    model.vocab = vocab;
    const std::size_t d = config.embedding_dim;
    const std::uint32_t v_rows = config.vocab_size;

    Rng init_rng(stable_hash(config.seed, "init"));
    // embeddings start at zero: pieces never seen in training stay exactly
    // zero and contribute nothing to the pooled representation
    model.embedding = Matrix(v_rows, d);
    model.classifier_w = Matrix(config.num_classes, d);
    for (double& x : model.classifier_w.data) x = init_rng.normal(0.0, 0.1);
    model.classifier_b.assign(config.num_classes, 0.0);
    if (config.pooling == Pooling::attentive) {
        model.attn_key.assign(d, 0.0);
        model.attn_query.assign(d, 0.0);
        for (double& x : model.attn_key) x = init_rng.normal(0.0, 0.1);
        for (double& x : model.attn_query) x = init_rng.normal(0.0, 0.1);
    }

    TrainReport report;
    TrainState best = snapshot(model);
    double best_val = -1.0;
    int best_epoch = 0;
    int stale_epochs = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng(stable_hash(config.seed, "epoch", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            TrainState grads;
            grads.embedding = Matrix(v_rows, d);
            grads.classifier_w = Matrix(config.num_classes, d);
            grads.classifier_b.assign(config.num_classes, 0.0);
            grads.attn_key.assign(model.attn_key.size(), 0.0);
            grads.attn_query.assign(model.attn_query.size(), 0.0);

            double batch_loss = 0.0;
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& te = train_set[order[k]];
                accumulate_gradients(model, te.tokens, te.example->label, scale, grads,
                                     batch_loss);
            }
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(batches + 1));
            }

            const double lr = config.learning_rate;
            for (std::size_t i = 0; i < model.embedding.data.size(); ++i) {
                model.embedding.data[i] -= lr * grads.embedding.data[i];
            }
            for (std::size_t i = 0; i < model.classifier_w.data.size(); ++i) {
                model.classifier_w.data[i] -= lr * grads.classifier_w.data[i];
            }
            for (std::size_t i = 0; i < model.classifier_b.size(); ++i) {
                model.classifier_b[i] -= lr * grads.classifier_b[i];
            }
            for (std::size_t i = 0; i < model.attn_key.size(); ++i) {
                model.attn_key[i] -= lr * grads.attn_key[i];
                model.attn_query[i] -= lr * grads.attn_query[i];
            }
            epoch_loss += batch_loss;
            ++batches;
        }

        report.train_loss.push_back(epoch_loss / static_cast<double>(batches));
        const MetricsResult val = split_metrics(model, val_set);
        const double val_acc = val.accuracy;
        report.val_accuracy.push_back(val_acc);
        report.val_macro_f1.push_back(val.macro_f1);
        report.stopping_epoch = epoch;

        if (val_acc > best_val) {
            best_val = val_acc;
            best = snapshot(model);
            best_epoch = epoch;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (stale_epochs >= config.early_stop_patience) break;
        }
    }

    restore(model, best);
    report.best_epoch = best_epoch;
    report.test_metrics = evaluate_metrics(model, dataset, Split::test);
    return {std::move(model), std::move(report)};
}

// ---- metrics ------------------------------------------------------------

namespace {

// one-vs-rest AUROC by the rank statistic, ties counted half
std::optional<double> auroc_one_vs_rest(const std::vector<double>& scores,
                                        const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool p : positive) n_pos += p ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
        for (std::size_t k = i; k < j; ++k) {
            if (positive[idx[k]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace

MetricsResult metrics_from_predictions(const std::vector<int>& labels,
                                       const std::vector<int>& predictions,
                                       const std::vector<std::vector<double>>& scores,
                                       int num_classes) {
    const std::size_t n = labels.size();
    if (predictions.size() != n) throw std::invalid_argument("metrics: size mismatch");
    if (n == 0) throw std::invalid_argument("metrics: empty split");

    MetricsResult res;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += labels[i] == predictions[i] ? 1 : 0;
    res.accuracy = static_cast<double>(correct) / static_cast<double>(n);

    double f1_sum = 0.0;
    int f1_classes = 0;
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool truth = labels[i] == c;
            const bool pred = predictions[i] == c;
            support += truth ? 1 : 0;
            if (truth && pred) ++tp;
            if (!truth && pred) ++fp;
            if (truth && !pred) ++fn;
        }
        if (support == 0) {
            log_warn("metrics: class " + std::to_string(c) +
                     " absent from split, excluded from macro averages");
            continue;
        }
        const double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
        ++f1_classes;
    }
    res.macro_f1 = f1_classes > 0 ? f1_sum / f1_classes : 0.0;

    if (!scores.empty()) {
        if (scores.size() != n) throw std::invalid_argument("metrics: scores size mismatch");
        double auroc_sum = 0.0;
        int auroc_classes = 0;
        for (int c = 0; c < num_classes; ++c) {
            std::vector<double> s(n);
            std::vector<bool> pos(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = scores[i][c];
                pos[i] = labels[i] == c;
            }
            if (auto a = auroc_one_vs_rest(s, pos)) {
                auroc_sum += *a;
                ++auroc_classes;
            }
        }
        if (auroc_classes > 0) res.macro_auroc = auroc_sum / auroc_classes;
    }
    return res;
}

MetricsResult evaluate_metrics(const ProxyModel& model, const Dataset& dataset, Split split) {
    const auto ptrs = dataset.split_examples(split);
    if (ptrs.empty()) {
        throw std::runtime_error(std::string("evaluate_metrics: empty split ") + split_name(split));
    }
    std::vector<int> labels, preds;
    std::vector<std::vector<double>> scores;
    for (const Example* e : ptrs) {
        const auto f = model.forward(tokenize(e->text, model.vocab));
        labels.push_back(e->label);
        int best = 0;
        for (int c = 1; c < model.num_classes(); ++c) {
            if (f.probabilities[c] > f.probabilities[best]) best = c;
        }
        preds.push_back(best);
        scores.push_back(f.probabilities);
    }
    return metrics_from_predictions(labels, preds, scores, model.num_classes());
}

// ---- checkpoint io ------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'B', 'M', '1'};
constexpr int kVersion = 1;

void append_f64_le(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

json config_to_json(const ModelConfig& c) {
    return json{{"embedding_dim", c.embedding_dim},
                {"pooling", pooling_name(c.pooling)},
                {"num_classes", c.num_classes},
                {"vocab_size", c.vocab_size},
                {"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"early_stop_patience", c.early_stop_patience},
                {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    const auto pooling = parse_pooling(j.at("pooling").get<std::string>());
    if (!pooling) throw std::runtime_error("checkpoint: unknown pooling kind");
    c.pooling = *pooling;
    c.num_classes = j.at("num_classes").get<int>();
    c.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.early_stop_patience = j.at("early_stop_patience").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void ProxyModel::save(const std::filesystem::path& path) const {
    std::string params;
    json blocks = json::object();
    auto emit = [&](const char* name, const double* data, std::size_t count) {
        blocks[name] = {{"offset", params.size()}, {"count", count}};
        for (std::size_t i = 0; i < count; ++i) append_f64_le(params, data[i]);
    };
    emit("embedding", embedding.data.data(), embedding.data.size());
    emit("attn_key", attn_key.data(), attn_key.size());
    emit("attn_query", attn_query.data(), attn_query.size());
    emit("classifier_w", classifier_w.data.data(), classifier_w.data.size());
    emit("classifier_b", classifier_b.data(), classifier_b.size());

    json header{{"version", kVersion},
                {"config", config_to_json(config)},
                {"vocabulary", {{"pieces", vocab.pieces()}, {"hash_buckets", vocab.hash_buckets()}}},
                {"blocks", blocks}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out.write(kMagic, 4);
    const std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
    char hlen_le[4];
    for (int i = 0; i < 4; ++i) hlen_le[i] = static_cast<char>((hlen >> (8 * i)) & 0xff);
    out.write(hlen_le, 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    out.write(params.data(), static_cast<std::streamsize>(params.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ProxyModel ProxyModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic, not a PBM1 file: " + path.string());
    }
    std::uint32_t hlen = 0;
    for (int i = 0; i < 4; ++i) {
        hlen |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 + i])) << (8 * i);
    }
    if (bytes.size() < 8 + static_cast<std::size_t>(hlen)) {
        throw std::runtime_error("checkpoint: truncated header (need " + std::to_string(hlen) +
                                 " bytes)");
    }
    json header;
    try {
        header = json::parse(bytes.substr(8, hlen));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: malformed header: ") + e.what());
    }
    if (header.at("version").get<int>() != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " +
                                 header.at("version").dump());
    }

    ProxyModel m;
    m.config = config_from_json(header.at("config"));
    m.vocab = Vocabulary(header.at("vocabulary").at("pieces").get<std::vector<std::string>>(),
                         header.at("vocabulary").at("hash_buckets").get<std::uint32_t>());

    const std::size_t params_begin = 8 + hlen;
    const auto& blocks = header.at("blocks");
    auto read_block = [&](const char* name, std::vector<double>& out) {
        const auto& b = blocks.at(name);
        const std::size_t offset = b.at("offset").get<std::size_t>();
        const std::size_t count = b.at("count").get<std::size_t>();
        if (params_begin + offset + count * 8 > bytes.size()) {
            throw std::runtime_error(std::string("checkpoint: truncated block '") + name +
                                     "' (need " + std::to_string(count * 8) + " bytes)");
        }
        out.resize(count);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + params_begin + offset);
        for (std::size_t i = 0; i < count; ++i) out[i] = read_f64_le(p + i * 8);
    };

    const std::size_t d = m.config.embedding_dim;
    read_block("embedding", m.embedding.data);
    m.embedding.rows = m.config.vocab_size;
    m.embedding.cols = d;
    if (m.embedding.data.size() != m.embedding.rows * d) {
        throw std::runtime_error("checkpoint: embedding block size mismatch");
    }
    read_block("attn_key", m.attn_key);
    read_block("attn_query", m.attn_query);
    read_block("classifier_w", m.classifier_w.data);
    m.classifier_w.rows = static_cast<std::size_t>(m.config.num_classes);
    m.classifier_w.cols = d;
    if (m.classifier_w.data.size() != m.classifier_w.rows * d) {
        throw std::runtime_error("checkpoint: classifier block size mismatch");
    }
    read_block("classifier_b", m.classifier_b);
    return m;
}

}  // namespace textrobust
