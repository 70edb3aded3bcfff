#include "textrobust/orchestrator.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "textrobust/hashing.hpp"
#include "textrobust/logging.hpp"
#include "textrobust/parallel.hpp"
#include "textrobust/version.hpp"
#include "textrobust/word_importance.hpp"

namespace textrobust {

using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) config_fail(path.empty() ? key : path + "." + key, "unknown field");
    }
}

template <typename T>
T get_field(const json& obj, const std::string& path, const char* key, const T& fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_fail(path + "." + key, "wrong type");
    }
}

template <typename T>
T require_field(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) config_fail(path + "." + key, "missing required field");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_fail(path + "." + key, "wrong type");
    }
}

std::filesystem::path resolve(const RunConfig& c, const std::filesystem::path& p) {
    return p.is_absolute() ? p : c.config_dir / p;
}

RemoteTargetConfig parse_remote(const json& t, const std::string& path) {
    check_keys(t, path,
               {"type", "name", "endpoint", "model", "prompt_template", "system_prompt",
                "verbalizers", "timeout_seconds", "max_retries", "max_in_flight", "max_tokens",
                "backoff_base_ms", "auth_token_env"});
    RemoteTargetConfig r;
    r.name = require_field<std::string>(t, path, "name");
    r.endpoint = require_field<std::string>(t, path, "endpoint");
    r.model_id = require_field<std::string>(t, path, "model");
    r.prompt_template = require_field<std::string>(t, path, "prompt_template");
    r.system_prompt = get_field<std::string>(t, path, "system_prompt", "");
    if (!t.contains("verbalizers") || !t.at("verbalizers").is_object()) {
        config_fail(path + ".verbalizers", "missing object mapping class index to strings");
    }
    for (const auto& [key, value] : t.at("verbalizers").items()) {
        int cls = -1;
        try {
            cls = std::stoi(key);
        } catch (...) {
            config_fail(path + ".verbalizers." + key, "key must be a class index");
        }
        if (!value.is_array()) config_fail(path + ".verbalizers." + key, "must be an array");
        r.verbalizers[cls] = value.get<std::vector<std::string>>();
    }
    r.timeout_seconds = get_field<double>(t, path, "timeout_seconds", r.timeout_seconds);
    r.max_retries = get_field<int>(t, path, "max_retries", r.max_retries);
    r.max_in_flight = get_field<int>(t, path, "max_in_flight", r.max_in_flight);
    r.max_tokens = get_field<int>(t, path, "max_tokens", r.max_tokens);
    r.backoff_base_ms = get_field<int>(t, path, "backoff_base_ms", r.backoff_base_ms);
    r.auth_token_env = get_field<std::string>(t, path, "auth_token_env", r.auth_token_env);
    return r;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config: malformed JSON in " + path.string() + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");

    check_keys(root, "",
               {"dataset", "vocabulary", "model", "attribution", "perturbation", "evaluation",
                "seed", "threads", "output_dir"});

    RunConfig c;
    c.config_dir = std::filesystem::absolute(path).parent_path();

    // the hash identifies the experiment; thread count and artifact
    // location are execution knobs that cannot affect produced bytes
    json hashed = root;
    hashed.erase("threads");
    hashed.erase("output_dir");
    c.config_hash = checksum_hex(hashed.dump());

    const json ds = root.value("dataset", json::object());
    check_keys(ds, "dataset", {"path", "schema"});
    c.dataset_path = require_field<std::string>(ds, "dataset", "path");
    if (ds.contains("schema")) {
        const json& s = ds.at("schema");
        check_keys(s, "dataset.schema", {"id", "text", "label", "split"});
        c.schema.id_field = get_field<std::string>(s, "dataset.schema", "id", c.schema.id_field);
        c.schema.text_field = get_field<std::string>(s, "dataset.schema", "text", c.schema.text_field);
        c.schema.label_field =
            get_field<std::string>(s, "dataset.schema", "label", c.schema.label_field);
        c.schema.split_field =
            get_field<std::string>(s, "dataset.schema", "split", c.schema.split_field);
    }

    const json vocab = root.value("vocabulary", json::object());
    check_keys(vocab, "vocabulary", {"max_size", "hash_buckets"});
    c.vocab_max_size = get_field<std::size_t>(vocab, "vocabulary", "max_size", c.vocab_max_size);
    c.hash_buckets = get_field<std::uint32_t>(vocab, "vocabulary", "hash_buckets", c.hash_buckets);
    if (c.vocab_max_size < 256) config_fail("vocabulary.max_size", "must be >= 256");
    if (c.hash_buckets < 1) config_fail("vocabulary.hash_buckets", "must be >= 1");

    const json model = root.value("model", json::object());
    check_keys(model, "model",
               {"embedding_dim", "pooling", "learning_rate", "epochs", "batch_size",
                "early_stop_patience", "seed"});
    c.model.embedding_dim =
        get_field<std::size_t>(model, "model", "embedding_dim", c.model.embedding_dim);
    const std::string pooling = get_field<std::string>(model, "model", "pooling", "mean");
    const auto parsed_pooling = parse_pooling(pooling);
    if (!parsed_pooling) config_fail("model.pooling", "expected 'mean' or 'attentive'");
    c.model.pooling = *parsed_pooling;
    c.model.learning_rate = get_field<double>(model, "model", "learning_rate", c.model.learning_rate);
    c.model.epochs = get_field<int>(model, "model", "epochs", 20);
    c.model.batch_size = get_field<int>(model, "model", "batch_size", 16);
    c.model.early_stop_patience =
        get_field<int>(model, "model", "early_stop_patience", c.model.early_stop_patience);
    if (model.contains("seed")) {
        c.model.seed = require_field<std::uint64_t>(model, "model", "seed");
        c.model_seed_explicit = true;
    }

    const json attr = root.value("attribution", json::object());
    check_keys(attr, "attribution",
               {"methods", "ig_steps", "sg_samples", "sg_sigma", "shap_samples", "baseline",
                "mask_piece", "value_target", "rank_abs"});
    c.methods = get_field<std::vector<std::string>>(attr, "attribution", "methods",
                                                    {"kernel_shap", "random"});
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        if (c.methods[i] != "random" && !parse_attribution_kind(c.methods[i])) {
            config_fail("attribution.methods[" + std::to_string(i) + "]",
                        "unknown method '" + c.methods[i] + "'");
        }
    }
    if (std::set<std::string>(c.methods.begin(), c.methods.end()).size() != c.methods.size()) {
        config_fail("attribution.methods", "duplicate method");
    }
    c.attribution.ig_steps = get_field<int>(attr, "attribution", "ig_steps", 50);
    c.attribution.sg_samples = get_field<int>(attr, "attribution", "sg_samples", 50);
    if (attr.contains("sg_sigma") && !attr.at("sg_sigma").is_null()) {
        c.attribution.sg_sigma = require_field<double>(attr, "attribution", "sg_sigma");
        if (*c.attribution.sg_sigma <= 0.0) config_fail("attribution.sg_sigma", "must be positive");
    }
    if (attr.contains("shap_samples") && !attr.at("shap_samples").is_null()) {
        c.attribution.shap_samples = require_field<std::size_t>(attr, "attribution", "shap_samples");
    }
    const std::string baseline = get_field<std::string>(attr, "attribution", "baseline",
                                                        "zero_embedding");
    if (baseline == "zero_embedding") {
        c.attribution.baseline = BaselineKind::zero_embedding;
    } else if (baseline == "mask_piece") {
        c.attribution.baseline = BaselineKind::mask_piece;
        c.attribution.mask_piece = require_field<std::string>(attr, "attribution", "mask_piece");
    } else {
        config_fail("attribution.baseline", "expected 'zero_embedding' or 'mask_piece'");
    }
    const std::string vt = get_field<std::string>(attr, "attribution", "value_target",
                                                  "probability");
    if (vt == "probability") {
        c.attribution.value_target = ValueTarget::probability;
    } else if (vt == "logit") {
        c.attribution.value_target = ValueTarget::logit;
    } else {
        config_fail("attribution.value_target", "expected 'probability' or 'logit'");
    }
    c.rank_abs = get_field<bool>(attr, "attribution", "rank_abs", false);

    const json pert = root.value("perturbation", json::object());
    check_keys(pert, "perturbation", {"kinds", "n_values", "resource_pack"});
    const auto kind_names = get_field<std::vector<std::string>>(pert, "perturbation", "kinds", {});
    if (kind_names.empty()) config_fail("perturbation.kinds", "must list at least one kind");
    for (std::size_t i = 0; i < kind_names.size(); ++i) {
        const auto kind = parse_perturbation_kind(kind_names[i]);
        if (!kind) {
            config_fail("perturbation.kinds[" + std::to_string(i) + "]",
                        "unknown kind '" + kind_names[i] + "'");
        }
        c.kinds.push_back(*kind);
    }
    c.n_values = get_field<std::vector<int>>(pert, "perturbation", "n_values",
                                             {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    for (std::size_t i = 0; i < c.n_values.size(); ++i) {
        if (c.n_values[i] < 1) {
            config_fail("perturbation.n_values[" + std::to_string(i) + "]", "must be >= 1");
        }
    }
    c.resource_pack = require_field<std::string>(pert, "perturbation", "resource_pack");

    const json eval = root.value("evaluation", json::object());
    check_keys(eval, "evaluation", {"targets", "threshold"});
    c.threshold = get_field<double>(eval, "evaluation", "threshold", 0.05);
    if (c.threshold < 0.0) config_fail("evaluation.threshold", "must be >= 0");
    if (eval.contains("targets")) {
        if (!eval.at("targets").is_array()) config_fail("evaluation.targets", "must be an array");
        std::size_t i = 0;
        for (const auto& t : eval.at("targets")) {
            const std::string tpath = "evaluation.targets[" + std::to_string(i) + "]";
            const std::string type = require_field<std::string>(t, tpath, "type");
            TargetSpec spec;
            if (type == "local") {
                check_keys(t, tpath, {"type", "name"});
                spec.type = TargetSpec::Type::local;
            } else if (type == "oracle") {
                check_keys(t, tpath, {"type", "name"});
                spec.type = TargetSpec::Type::oracle;
            } else if (type == "remote") {
                spec.type = TargetSpec::Type::remote;
                spec.remote = parse_remote(t, tpath);
            } else {
                config_fail(tpath + ".type", "expected 'local', 'oracle' or 'remote'");
            }
            spec.name = require_field<std::string>(t, tpath, "name");
            c.targets.push_back(std::move(spec));
            ++i;
        }
    }
    std::set<std::string> target_names;
    for (const auto& t : c.targets) {
        if (!target_names.insert(t.name).second) {
            config_fail("evaluation.targets", "duplicate target name '" + t.name + "'");
        }
    }

    c.seed = get_field<std::uint64_t>(root, "", "seed", 1);
    c.threads = get_field<int>(root, "", "threads", 1);
    if (c.threads < 0) config_fail("threads", "must be >= 0 (0 = hardware default)");
    c.out_dir = require_field<std::string>(root, "", "output_dir");

    const auto dataset_abs = resolve(c, c.dataset_path);
    if (!std::filesystem::exists(dataset_abs)) {
        config_fail("dataset.path", "file does not exist: " + dataset_abs.string());
    }
    const auto pack_abs = resolve(c, c.resource_pack);
    if (!std::filesystem::exists(pack_abs)) {
        config_fail("perturbation.resource_pack", "file does not exist: " + pack_abs.string());
    }
    return c;
}

// ---- stage plumbing ------------------------------------------------------

namespace {

struct StageWriter {
    std::filesystem::path dir;
    std::map<std::string, std::string> artifacts;  // relpath → checksum

    explicit StageWriter(std::filesystem::path d) : dir(std::move(d)) {
        std::filesystem::create_directories(dir);
    }

    void write(const std::string& relpath, const std::string& content) {
        const auto full = dir / relpath;
        std::filesystem::create_directories(full.parent_path());
        std::ofstream out(full, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("cannot write " + full.string());
        artifacts[relpath] = checksum_hex(content);
    }

    void track(const std::string& relpath) {
        artifacts[relpath] = file_checksum((dir / relpath).string());
    }

    void finish(const RunConfig& config, const char* command) {
        const json manifest{{"tool_version", kToolVersion},
                            {"command", command},
                            {"config_hash", config.config_hash},
                            {"seed", config.seed},
                            {"artifacts", artifacts}};
        std::ofstream out(dir / "run-manifest.json", std::ios::binary | std::ios::trunc);
        out << manifest.dump(2) << "\n";
        if (!out) throw std::runtime_error("cannot write run-manifest in " + dir.string());
    }
};

Dataset load_config_dataset(const RunConfig& c) {
    return load_dataset(resolve(c, c.dataset_path), c.schema);
}

std::filesystem::path checkpoint_path(const RunConfig& c) {
    return resolve(c, c.out_dir) / "model" / "checkpoint.pbm";
}

ProxyModel load_checkpoint_or_fail(const RunConfig& c) {
    const auto path = checkpoint_path(c);
    if (!std::filesystem::exists(path)) {
        throw std::runtime_error("stage dependency: missing checkpoint " + path.string() +
                                 " (run 'train' first)");
    }
    return ProxyModel::load(path);
}

json metrics_to_json(const MetricsResult& m) {
    json j{{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
    j["macro_auroc"] = m.macro_auroc ? json(*m.macro_auroc) : json(nullptr);
    return j;
}

std::string ranking_to_line(const WordRanking& r) {
    json ranked = json::array();
    for (const auto& rw : r.ranked) {
        ranked.push_back(json{{"word_index", rw.word_index}, {"importance", rw.importance}});
    }
    const json j{{"example_id", r.example_id},
                 {"method", r.method},
                 {"ranked", ranked},
                 {"excluded_word_indices", r.excluded_word_indices}};
    return j.dump();
}

}  // namespace

std::map<std::string, WordRanking> load_rankings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing rankings file: " + path.string());
    std::map<std::string, WordRanking> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        WordRanking r;
        r.example_id = j.at("example_id").get<std::string>();
        r.method = j.at("method").get<std::string>();
        for (const auto& rw : j.at("ranked")) {
            r.ranked.push_back({rw.at("word_index").get<std::size_t>(),
                                rw.at("importance").get<double>()});
        }
        r.excluded_word_indices =
            j.at("excluded_word_indices").get<std::vector<std::size_t>>();
        out.emplace(r.example_id, std::move(r));
    }
    return out;
}

void cmd_train(const RunConfig& config) {
    const Dataset dataset = load_config_dataset(config);
    const Vocabulary vocab = build_vocabulary(dataset, config.vocab_max_size, config.hash_buckets);

    ModelConfig mc = config.model;
    if (!config.model_seed_explicit) mc.seed = stable_hash(config.seed, "train");

    auto [model, report] = train(dataset, vocab, mc);

    StageWriter stage(resolve(config, config.out_dir) / "model");
    model.save(stage.dir / "checkpoint.pbm");
    stage.track("checkpoint.pbm");

    const json rj{{"train_loss", report.train_loss},
                  {"val_accuracy", report.val_accuracy},
                  {"val_macro_f1", report.val_macro_f1},
                  {"stopping_epoch", report.stopping_epoch},
                  {"best_epoch", report.best_epoch},
                  {"test_metrics", metrics_to_json(report.test_metrics)}};
    stage.write("train_report.json", rj.dump(2) + "\n");
    stage.finish(config, "train");
    log_info("train: stopped at epoch " + std::to_string(report.stopping_epoch) +
             ", test accuracy " + std::to_string(report.test_metrics.accuracy));
}

void cmd_rank(const RunConfig& config) {
    const Dataset dataset = load_config_dataset(config);
    const ProxyModel model = load_checkpoint_or_fail(config);

    auto test_ptrs = dataset.split_examples(Split::test);
    std::sort(test_ptrs.begin(), test_ptrs.end(),
              [](const Example* a, const Example* b) { return a->id < b->id; });

    std::vector<TokenizedText> tokenized(test_ptrs.size());
    parallel_for(test_ptrs.size(), config.threads, [&](std::size_t i) {
        tokenized[i] = tokenize(test_ptrs[i]->text, model.vocab);
    });

    StageWriter stage(resolve(config, config.out_dir) / "rankings");
    for (const std::string& method : config.methods) {
        std::vector<WordRanking> rankings(test_ptrs.size());
        std::vector<TokenAttribution> attributions(test_ptrs.size());
        const bool is_random = method == "random";

        parallel_for(test_ptrs.size(), config.threads, [&](std::size_t i) {
            const std::string& id = test_ptrs[i]->id;
            if (is_random) {
                rankings[i] = random_ranking(tokenized[i],
                                             stable_hash(config.seed, "rank", method, id));
            } else {
                AttributionMethod am;
                am.kind = *parse_attribution_kind(method);
                am.params = config.attribution;
                const int target = model.predict_label(tokenized[i]);
                attributions[i] = attribute(model, tokenized[i], am, target,
                                            stable_hash(config.seed, "rank", method, id));
                rankings[i] = aggregate(tokenized[i], attributions[i], config.rank_abs);
            }
            rankings[i].example_id = id;
            rankings[i].method = method;
        });

        std::string ranking_lines;
        for (const auto& r : rankings) {
            ranking_lines += ranking_to_line(r);
            ranking_lines += '\n';
        }
        stage.write(method + ".jsonl", ranking_lines);

        if (!is_random) {
            std::string attr_lines;
            for (std::size_t i = 0; i < test_ptrs.size(); ++i) {
                const json j{{"example_id", test_ptrs[i]->id},
                             {"method", method},
                             {"target_class", attributions[i].target_class},
                             {"target_kind",
                              attributions[i].kind == AttributionKind::kernel_shap ||
                                      attributions[i].kind == AttributionKind::occlusion
                                  ? "probability"
                                  : "logit"},
                             {"scores", attributions[i].scores}};
                attr_lines += j.dump();
                attr_lines += '\n';
            }
            stage.write("attributions_" + method + ".jsonl", attr_lines);
        }
    }
    stage.finish(config, "rank");
}

void cmd_perturb(const RunConfig& config) {
    const Dataset dataset = load_config_dataset(config);
    const auto rankings_dir = resolve(config, config.out_dir) / "rankings";

    RankingSet rankings;
    for (const std::string& method : config.methods) {
        const auto path = rankings_dir / (method + ".jsonl");
        if (!std::filesystem::exists(path)) {
            throw std::runtime_error("stage dependency: missing rankings " + path.string() +
                                     " (run 'rank' first)");
        }
        rankings[method] = load_rankings_file(path);
    }

    const LanguageResources resources = load_resources(resolve(config, config.resource_pack));
    const auto suite_dir = resolve(config, config.out_dir) / "suite";
    generate_suite(dataset, rankings, config.kinds, config.n_values, resources, config.seed,
                   suite_dir, config.threads);

    StageWriter stage(suite_dir);
    for (const auto& entry : std::filesystem::directory_iterator(suite_dir)) {
        if (entry.path().filename() == "run-manifest.json") continue;
        if (entry.is_regular_file()) stage.track(entry.path().filename().string());
    }
    stage.finish(config, "perturb");
}

void cmd_eval(const RunConfig& config) {
    const Dataset dataset = load_config_dataset(config);
    const auto suite_dir = resolve(config, config.out_dir) / "suite";
    if (!std::filesystem::exists(suite_dir / "manifest.json")) {
        throw std::runtime_error("stage dependency: missing suite " +
                                 (suite_dir / "manifest.json").string() +
                                 " (run 'perturb' first)");
    }
    if (config.targets.empty()) {
        throw ConfigError("config: evaluation.targets: at least one target required for eval");
    }

    StageWriter stage(resolve(config, config.out_dir) / "eval");
    for (const TargetSpec& spec : config.targets) {
        std::unique_ptr<TargetModel> target;
        switch (spec.type) {
            case TargetSpec::Type::local:
                target = std::make_unique<LocalProxyTarget>(spec.name, load_checkpoint_or_fail(config));
                break;
            case TargetSpec::Type::oracle:
                target = std::make_unique<OracleTarget>(spec.name, dataset);
                break;
            case TargetSpec::Type::remote:
                target = std::make_unique<RemoteTarget>(spec.remote, dataset.label_names);
                break;
        }

        const auto target_dir = stage.dir / spec.name;
        std::filesystem::create_directories(target_dir);

        const OriginalEvaluation original = evaluate_original(*target, dataset, config.threads);
        write_prediction_cache(original.by_id, target_dir / "original_predictions.jsonl");
        stage.track(spec.name + "/original_predictions.jsonl");
        stage.write(spec.name + "/original_metrics.json",
                    metrics_to_json(original.metrics).dump(2) + "\n");

        const auto cells_dir = target_dir / "cells";
        const GridResult grid =
            run_grid(*target, suite_dir, original, dataset, config.threads, &cells_dir);
        const RobustnessReport report = robustness_check(grid, config.threshold);
        emit_report(report, grid, spec.name, target_dir);
        stage.track(spec.name + "/report.json");
        stage.track(spec.name + "/curves.csv");
        stage.track(spec.name + "/summary.txt");
        for (const auto& entry : std::filesystem::directory_iterator(cells_dir)) {
            if (entry.is_regular_file()) {
                stage.track(spec.name + "/cells/" + entry.path().filename().string());
            }
        }
    }
    stage.finish(config, "eval");
}

void cmd_all(const RunConfig& config) {
    cmd_train(config);
    cmd_rank(config);
    cmd_perturb(config);
    cmd_eval(config);
}

}  // namespace textrobust
