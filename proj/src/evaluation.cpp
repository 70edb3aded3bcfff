#include "textrobust/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "textrobust/parallel.hpp"

namespace textrobust {

using nlohmann::json;

Prediction LocalProxyTarget::predict(const std::string& id, const std::string& text) const {
    (void)id;
    const auto f = model_.forward(tokenize(text, model_.vocab));
    Prediction p;
    int best = 0;
    for (int c = 1; c < model_.num_classes(); ++c) {
        if (f.probabilities[c] > f.probabilities[best]) best = c;
    }
    p.label = best;
    p.scores = f.probabilities;
    return p;
}

OracleTarget::OracleTarget(std::string name, const Dataset& dataset) : name_(std::move(name)) {
    for (const auto& ex : dataset.examples) labels_[ex.id] = ex.label;
}

Prediction OracleTarget::predict(const std::string& id, const std::string& text) const {
    (void)text;
    const auto it = labels_.find(id);
    if (it == labels_.end()) {
        throw std::runtime_error("oracle target: unknown example id '" + id + "'");
    }
    Prediction p;
    p.label = it->second;
    return p;
}

OriginalEvaluation evaluate_original(const TargetModel& target, const Dataset& dataset,
                                     int threads) {
    auto test_ptrs = dataset.split_examples(Split::test);
    if (test_ptrs.empty()) throw std::runtime_error("evaluate_original: empty test split");
    std::sort(test_ptrs.begin(), test_ptrs.end(),
              [](const Example* a, const Example* b) { return a->id < b->id; });

    // remote targets are IO-bound: their own in-flight bound wins over the
    // local compute knob (bytes are schedule-independent either way)
    if (target.max_in_flight() > 0) threads = target.max_in_flight();

    std::vector<Prediction> preds(test_ptrs.size());
    parallel_for(test_ptrs.size(), threads, [&](std::size_t i) {
        preds[i] = target.predict(test_ptrs[i]->id, test_ptrs[i]->text);
    });

    OriginalEvaluation out;
    std::vector<int> labels, predictions;
    std::vector<std::vector<double>> scores;
    bool all_scored = target.has_probabilities();
    for (std::size_t i = 0; i < test_ptrs.size(); ++i) {
        out.by_id.emplace(test_ptrs[i]->id, preds[i]);
        labels.push_back(test_ptrs[i]->label);
        predictions.push_back(preds[i].label.value_or(-1));
        all_scored = all_scored && !preds[i].scores.empty();
        scores.push_back(preds[i].scores);
    }
    if (!all_scored) scores.clear();
    out.metrics = metrics_from_predictions(labels, predictions, scores, dataset.num_classes());
    return out;
}

AsrResult compute_asr(const std::map<std::string, Prediction>& original,
                      const std::map<std::string, Prediction>& perturbed,
                      const std::map<std::string, int>& labels) {
    if (original.size() != perturbed.size() || original.size() != labels.size()) {
        throw std::invalid_argument("compute_asr: prediction tables cover different example sets");
    }
    AsrResult res;
    for (const auto& [id, orig] : original) {
        const auto pit = perturbed.find(id);
        const auto lit = labels.find(id);
        if (pit == perturbed.end() || lit == labels.end()) {
            throw std::invalid_argument("compute_asr: id mismatch for '" + id + "'");
        }
        AsrExampleRecord rec;
        rec.example_id = id;
        rec.original = orig.label;
        rec.perturbed = pit->second.label;
        const int y = lit->second;
        // original parse failure drops the example from the denominator
        rec.counted = orig.label.has_value() && *orig.label == y;
        if (rec.counted) {
            ++res.denominator;
            // a perturbed parse failure is not the correct answer: a flip
            rec.flipped = !rec.perturbed.has_value() || *rec.perturbed != y;
            if (rec.flipped) ++res.numerator;
        }
        res.records.push_back(std::move(rec));
    }
    if (res.denominator > 0) {
        res.asr = static_cast<double>(res.numerator) / static_cast<double>(res.denominator);
    }
    return res;
}

namespace {

std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

}  // namespace

GridResult run_grid(const TargetModel& target, const std::filesystem::path& suite_dir,
                    const OriginalEvaluation& original, const Dataset& dataset, int threads,
                    const std::filesystem::path* cache_dir) {
    const SuiteManifest manifest = load_suite_manifest(suite_dir);
    if (manifest.files.empty()) throw std::runtime_error("run_grid: suite manifest lists no files");
    if (cache_dir) std::filesystem::create_directories(*cache_dir);

    std::map<std::string, int> labels;
    for (const auto& ex : dataset.examples) {
        if (ex.split == Split::test) labels[ex.id] = ex.label;
    }

    const int bounded = target.max_in_flight() > 0 ? target.max_in_flight() : threads;

    GridResult grid;
    for (const auto& info : manifest.files) {
        const auto records = load_suite_file(suite_dir / info.path);
        std::vector<Prediction> preds(records.size());
        parallel_for(records.size(), bounded, [&](std::size_t i) {
            preds[i] = target.predict(records[i].base_id, records[i].perturbed_text);
        });
        std::map<std::string, Prediction> perturbed;
        for (std::size_t i = 0; i < records.size(); ++i) {
            perturbed.emplace(records[i].base_id, preds[i]);
        }
        if (cache_dir) {
            const std::string stem = std::filesystem::path(info.path).stem().string();
            write_prediction_cache(perturbed, *cache_dir / (stem + ".predictions.jsonl"));
        }
        AsrResult cell = compute_asr(original.by_id, perturbed, labels);
        cell.target = target.name();
        cell.kind = info.kind;
        cell.method = info.method;
        cell.n = info.n;
        grid.cells.push_back(std::move(cell));
    }

    std::sort(grid.cells.begin(), grid.cells.end(), [](const AsrResult& a, const AsrResult& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.method != b.method) return a.method < b.method;
        return a.n < b.n;
    });

    // means over n per (kind, method) and over kinds per (n, method)
    std::map<std::pair<std::string, std::string>, std::vector<std::optional<double>>> kind_bins;
    std::map<std::pair<std::string, int>, std::vector<std::optional<double>>> n_bins;
    for (const auto& cell : grid.cells) {
        kind_bins[{cell.kind, cell.method}].push_back(cell.asr);
        n_bins[{cell.method, cell.n}].push_back(cell.asr);
    }
    for (const auto& [key, values] : kind_bins) {
        grid.by_kind.push_back({key.second, key.first, mean_defined(values)});
    }
    for (const auto& [key, values] : n_bins) {
        grid.by_n.push_back({key.first, std::to_string(key.second), mean_defined(values)});
    }
    return grid;
}

RobustnessReport robustness_check(const GridResult& grid, double threshold) {
    if (grid.cells.empty()) throw std::invalid_argument("robustness_check: empty grid");
    RobustnessReport report;
    report.threshold = threshold;

    std::map<std::string, KindVerdict> verdicts;
    for (const auto& row : grid.by_kind) {
        auto& v = verdicts[row.key];
        if (v.kind.empty()) {
            v.kind = row.key;
            v.worst_mean_asr = -1.0;
        }
        if (row.mean_asr && *row.mean_asr > v.worst_mean_asr) {
            v.worst_mean_asr = *row.mean_asr;
            v.worst_method = row.method;
        }
    }
    for (auto& [kind, v] : verdicts) {
        (void)kind;
        if (v.worst_mean_asr < 0.0) v.worst_mean_asr = 0.0;  // every cell undefined
        v.pass = v.worst_mean_asr <= report.threshold;
        report.verdicts.push_back(v);
    }
    return report;
}

namespace {

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json asr_to_json(const std::optional<double>& asr) {
    if (!asr) return nullptr;
    return *asr;
}

}  // namespace

void emit_report(const RobustnessReport& report, const GridResult& grid,
                 const std::string& target_name, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    json cells = json::array();
    for (const auto& c : grid.cells) {
        cells.push_back(json{{"target", c.target},
                             {"kind", c.kind},
                             {"method", c.method},
                             {"n", c.n},
                             {"asr", asr_to_json(c.asr)},
                             {"numerator", c.numerator},
                             {"denominator", c.denominator}});
    }
    json by_kind = json::array();
    for (const auto& r : grid.by_kind) {
        by_kind.push_back(
            json{{"kind", r.key}, {"method", r.method}, {"mean_asr", asr_to_json(r.mean_asr)}});
    }
    json by_n = json::array();
    for (const auto& r : grid.by_n) {
        by_n.push_back(
            json{{"n", std::stoi(r.key)}, {"method", r.method}, {"mean_asr", asr_to_json(r.mean_asr)}});
    }
    json verdicts = json::array();
    for (const auto& v : report.verdicts) {
        verdicts.push_back(json{{"kind", v.kind},
                                {"pass", v.pass},
                                {"worst_mean_asr", v.worst_mean_asr},
                                {"worst_method", v.worst_method},
                                {"margin", report.threshold - v.worst_mean_asr}});
    }
    const json rj{{"target", target_name},
                  {"threshold", report.threshold},
                  {"grid", cells},
                  {"aggregates", {{"by_kind", by_kind}, {"by_n", by_n}}},
                  {"verdicts", verdicts}};
    {
        std::ofstream out(out_dir / "report.json", std::ios::binary | std::ios::trunc);
        out << rj.dump(2) << "\n";
        if (!out) throw std::runtime_error("emit_report: cannot write report.json");
    }
    {
        std::ofstream out(out_dir / "curves.csv", std::ios::binary | std::ios::trunc);
        out << "target,method,kind,n,asr\n";
        for (const auto& c : grid.cells) {
            out << c.target << ',' << c.method << ',' << c.kind << ',' << c.n << ','
                << (c.asr ? fixed6(*c.asr) : "") << "\n";
        }
        if (!out) throw std::runtime_error("emit_report: cannot write curves.csv");
    }
    {
        std::ofstream out(out_dir / "summary.txt", std::ios::binary | std::ios::trunc);
        out << "target: " << target_name << "\n";
        out << "threshold: " << fixed6(report.threshold) << "  (mean ASR over n per kind)\n\n";
        out << "kind      worst-mean-ASR  worst-method              verdict\n";
        for (const auto& v : report.verdicts) {
            char line[160];
            std::snprintf(line, sizeof(line), "%-8s  %-14s  %-24s  %s\n", v.kind.c_str(),
                          fixed6(v.worst_mean_asr).c_str(), v.worst_method.c_str(),
                          v.pass ? "PASS" : "FAIL");
            out << line;
        }
        if (!out) throw std::runtime_error("emit_report: cannot write summary.txt");
    }
}

void write_prediction_cache(const std::map<std::string, Prediction>& predictions,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write prediction cache: " + path.string());
    for (const auto& [id, pred] : predictions) {
        json j{{"example_id", id}, {"raw", pred.raw}};
        if (pred.label) {
            j["label"] = *pred.label;
        } else {
            j["parse_failure"] = true;
        }
        out << j.dump() << "\n";
    }
}

}  // namespace textrobust
