#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "textrobust/corpus.hpp"
#include "textrobust/perturbation.hpp"
#include "textrobust/proxy_model.hpp"

namespace textrobust {

struct Prediction {
    std::optional<int> label;        // nullopt = parse_failure
    std::string raw;                 // raw target output, kept for audit
    std::vector<double> scores;      // per-class probabilities when available
};

// f in the ASR statistic. predict() must be deterministic (remote targets
// are pinned to temperature 0) and safe to call from multiple threads.
class TargetModel {
public:
    virtual ~TargetModel() = default;
    virtual std::string name() const = 0;
    virtual Prediction predict(const std::string& id, const std::string& text) const = 0;
    virtual bool has_probabilities() const { return false; }
    // 0 = no target-imposed bound (local models)
    virtual int max_in_flight() const { return 0; }
};

class LocalProxyTarget : public TargetModel {
public:
    LocalProxyTarget(std::string name, ProxyModel model)
        : name_(std::move(name)), model_(std::move(model)) {}
    std::string name() const override { return name_; }
    Prediction predict(const std::string& id, const std::string& text) const override;
    bool has_probabilities() const override { return true; }
    const ProxyModel& model() const { return model_; }

private:
    std::string name_;
    ProxyModel model_;
};

// Debugging target that answers with the true label regardless of input;
// by construction it is never fooled, so every ASR is exactly 0.
class OracleTarget : public TargetModel {
public:
    OracleTarget(std::string name, const Dataset& dataset);
    std::string name() const override { return name_; }
    Prediction predict(const std::string& id, const std::string& text) const override;

private:
    std::string name_;
    std::map<std::string, int> labels_;
};

struct RemoteTargetConfig {
    std::string name = "remote";
    std::string endpoint;           // e.g. http://localhost:8080/v1/chat/completions
    std::string model_id;
    std::string prompt_template;    // {text} and {label_list} placeholders
    std::string system_prompt;
    std::map<int, std::vector<std::string>> verbalizers;
    double timeout_seconds = 30.0;
    int max_retries = 3;            // total attempts
    int max_in_flight = 4;
    int max_tokens = 32;
    int backoff_base_ms = 1000;     // doubles per retry
    std::string auth_token_env = "TEXTROBUST_API_TOKEN";

    void validate(int num_classes) const;
};

class RemoteTarget : public TargetModel {
public:
    RemoteTarget(RemoteTargetConfig config, std::vector<std::string> label_names);
    std::string name() const override { return config_.name; }
    Prediction predict(const std::string& id, const std::string& text) const override;
    int max_in_flight() const override { return config_.max_in_flight; }

    // case-folded containment; earliest occurrence wins; a tie between
    // distinct classes at the same position is a parse_failure
    std::optional<int> parse_label(const std::string& raw) const;
    std::string build_user_prompt(const std::string& text) const;

private:
    RemoteTargetConfig config_;
    std::vector<std::string> label_names_;
    std::string auth_token_;
};

struct OriginalEvaluation {
    std::map<std::string, Prediction> by_id;
    MetricsResult metrics;  // parse failures count as wrong predictions
};

OriginalEvaluation evaluate_original(const TargetModel& target, const Dataset& dataset,
                                     int threads);

struct AsrExampleRecord {
    std::string example_id;
    std::optional<int> original;   // nullopt = parse_failure
    std::optional<int> perturbed;
    bool counted = false;  // in the denominator
    bool flipped = false;  // counted && perturbed != label
};

struct AsrResult {
    std::string target;
    std::string kind;
    std::string method;
    int n = 0;
    std::optional<double> asr;  // nullopt when the denominator is 0
    std::size_t numerator = 0;
    std::size_t denominator = 0;
    std::vector<AsrExampleRecord> records;
};

// Eq.-style counting: denominator = originally-correct examples,
// numerator = those whose perturbed prediction differs from the label.
// A parse failure on the perturbed side counts as a flip; on the original
// side it removes the example from the denominator.
AsrResult compute_asr(const std::map<std::string, Prediction>& original,
                      const std::map<std::string, Prediction>& perturbed,
                      const std::map<std::string, int>& labels);

struct AggregateRow {
    std::string method;
    std::string key;  // kind name, or n rendered as text
    std::optional<double> mean_asr;
};

struct GridResult {
    std::vector<AsrResult> cells;            // sorted by (kind, method, n)
    std::vector<AggregateRow> by_kind;       // mean over n per (kind, method)
    std::vector<AggregateRow> by_n;          // mean over kinds per (n, method)
};

// cache_dir, when given, receives one prediction-cache JSONL per suite
// file so alternative scorings can be recomputed offline.
GridResult run_grid(const TargetModel& target, const std::filesystem::path& suite_dir,
                    const OriginalEvaluation& original, const Dataset& dataset, int threads,
                    const std::filesystem::path* cache_dir = nullptr);

struct KindVerdict {
    std::string kind;
    bool pass = true;
    double worst_mean_asr = 0.0;  // max over methods of mean-over-n ASR
    std::string worst_method;
};

struct RobustnessReport {
    double threshold = 0.05;
    std::vector<KindVerdict> verdicts;
};

RobustnessReport robustness_check(const GridResult& grid, double threshold = 0.05);

// report.json + curves.csv + summary.txt; byte-identical for identical
// inputs.
void emit_report(const RobustnessReport& report, const GridResult& grid,
                 const std::string& target_name, const std::filesystem::path& out_dir);

// JSON-Lines prediction cache {example_id, label|parse_failure, raw}
void write_prediction_cache(const std::map<std::string, Prediction>& predictions,
                            const std::filesystem::path& path);

}  // namespace textrobust
