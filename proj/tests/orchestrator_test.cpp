#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include <json.hpp>

#include "support/test_util.hpp"
#include "textrobust/orchestrator.hpp"

using namespace textrobust;
using nlohmann::json;

namespace {

// writes a dataset plus a minimal config into tmp and returns the config path
std::filesystem::path write_minimal_setup(const testutil::TempDir& tmp, json overrides = {}) {
    const Dataset ds = testutil::trigger_dataset(80, 30);
    std::string lines;
    for (const auto& ex : ds.examples) {
        lines += json{{"id", ex.id},
                      {"text", ex.text},
                      {"label", ex.label},
                      {"split", split_name(ex.split)}}
                     .dump() +
                 "\n";
    }
    testutil::write_file(tmp.path() / "ds.jsonl", lines);

    json config{
        {"dataset", {{"path", "ds.jsonl"}}},
        {"vocabulary", {{"max_size", 512}, {"hash_buckets", 128}}},
        {"model",
         {{"embedding_dim", 12}, {"learning_rate", 1.0}, {"epochs", 8}, {"early_stop_patience", 4}}},
        {"attribution", {{"methods", {"grad_x_input", "random"}}}},
        {"perturbation",
         {{"kinds", {"RSub"}},
          {"n_values", {1, 2}},
          {"resource_pack",
           std::string(TEXTROBUST_SOURCE_DIR) + "/resources/polish/pack.json"}}},
        {"evaluation", {{"targets", {{{"type", "local"}, {"name", "proxy"}}}}}},
        {"seed", 5},
        {"threads", 1},
        {"output_dir", "run"},
    };
    for (auto& [key, value] : overrides.items()) config[key] = value;
    testutil::write_file(tmp.path() / "config.json", config.dump(2));
    return tmp.path() / "config.json";
}

}  // namespace

TEST_CASE("config errors carry field paths") {
    testutil::TempDir tmp("config");
    const Dataset ds = testutil::trigger_dataset(4, 2);
    testutil::write_file(tmp.path() / "ds.jsonl", "{}");

    auto expect_error = [&](json config, const char* needle) {
        testutil::write_file(tmp.path() / "bad.json", config.dump());
        try {
            load_run_config(tmp.path() / "bad.json");
            FAIL_CHECK("expected ConfigError containing: ", needle);
        } catch (const ConfigError& e) {
            INFO(e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    json base{
        {"dataset", {{"path", "ds.jsonl"}}},
        {"perturbation",
         {{"kinds", {"RSub"}},
          {"resource_pack", std::string(TEXTROBUST_SOURCE_DIR) + "/resources/polish/pack.json"}}},
        {"output_dir", "run"},
    };

    json missing_out = base;
    missing_out.erase("output_dir");
    expect_error(missing_out, "output_dir");

    json bad_kind = base;
    bad_kind["perturbation"]["kinds"] = {"RSub", "Foo"};
    expect_error(bad_kind, "perturbation.kinds[1]");

    json bad_method = base;
    bad_method["attribution"] = {{"methods", {"gradientt"}}};
    expect_error(bad_method, "attribution.methods[0]");

    json unknown_field = base;
    unknown_field["modle"] = json::object();
    expect_error(unknown_field, "modle");

    json bad_pooling = base;
    bad_pooling["model"] = {{"pooling", "max"}};
    expect_error(bad_pooling, "model.pooling");

    json missing_dataset = base;
    missing_dataset["dataset"]["path"] = "nope.jsonl";
    expect_error(missing_dataset, "does not exist");

    json bad_n = base;
    bad_n["perturbation"]["n_values"] = {0};
    expect_error(bad_n, "n_values[0]");
}

TEST_CASE("eval before perturb is a stage-dependency error naming the suite") {
    testutil::TempDir tmp("stages");
    const auto config_path = write_minimal_setup(tmp);
    const RunConfig config = load_run_config(config_path);
    try {
        cmd_eval(config);
        FAIL("expected dependency error");
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        INFO(what);
        CHECK(what.find("suite") != std::string::npos);
        CHECK(what.find("perturb") != std::string::npos);
    }
}

TEST_CASE("rank before train is a stage-dependency error naming the checkpoint") {
    testutil::TempDir tmp("stages");
    const auto config_path = write_minimal_setup(tmp);
    const RunConfig config = load_run_config(config_path);
    try {
        cmd_rank(config);
        FAIL("expected dependency error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("checkpoint") != std::string::npos);
    }
}

TEST_CASE("cmd_all produces the full artifact tree and is idempotent") {
    testutil::TempDir tmp("all");
    const auto config_path = write_minimal_setup(tmp);
    const RunConfig config = load_run_config(config_path);
    cmd_all(config);

    const auto run = tmp.path() / "run";
    for (const char* f :
         {"model/checkpoint.pbm", "model/train_report.json", "model/run-manifest.json",
          "rankings/grad_x_input.jsonl", "rankings/random.jsonl",
          "rankings/attributions_grad_x_input.jsonl", "suite/manifest.json",
          "suite/perturbed_RSub_grad_x_input_n1.jsonl", "eval/proxy/report.json",
          "eval/proxy/curves.csv", "eval/proxy/summary.txt",
          "eval/proxy/original_predictions.jsonl", "eval/run-manifest.json"}) {
        INFO(f);
        CHECK(std::filesystem::exists(run / f));
    }

    // the denominator is a property of (target, test split), stable
    // across every (kind, n, method) cell
    const auto report = json::parse(testutil::read_file(run / "eval/proxy/report.json"));
    std::set<std::size_t> denominators;
    for (const auto& cell : report.at("grid")) {
        denominators.insert(cell.at("denominator").get<std::size_t>());
    }
    CHECK(denominators.size() == 1);

    // second run reproduces every manifest byte
    std::map<std::string, std::string> manifests;
    for (const char* m : {"model/run-manifest.json", "rankings/run-manifest.json",
                          "suite/run-manifest.json", "eval/run-manifest.json"}) {
        manifests[m] = testutil::read_file(run / m);
    }
    cmd_all(config);
    for (const auto& [m, before] : manifests) {
        CHECK(testutil::read_file(run / m) == before);
    }
}

TEST_CASE("rankings round-trip through their dump files") {
    testutil::TempDir tmp("roundtrip");
    const auto config_path = write_minimal_setup(tmp);
    const RunConfig config = load_run_config(config_path);
    cmd_train(config);
    cmd_rank(config);

    const auto loaded = load_rankings_file(tmp.path() / "run/rankings/grad_x_input.jsonl");
    CHECK(loaded.size() == 30);  // one per test example
    for (const auto& [id, ranking] : loaded) {
        CHECK(ranking.example_id == id);
        CHECK(ranking.method == "grad_x_input");
        CHECK_FALSE(ranking.ranked.empty());
        for (std::size_t i = 1; i < ranking.ranked.size(); ++i) {
            CHECK(ranking.ranked[i - 1].importance >= ranking.ranked[i].importance);
        }
    }
}

TEST_CASE("threads do not change artifact bytes or the config hash") {
    testutil::TempDir tmp("threads");
    const auto serial_path = write_minimal_setup(tmp, {{"threads", 1}, {"output_dir", "serial"}});
    const RunConfig serial = load_run_config(serial_path);
    cmd_all(serial);

    const auto parallel_path =
        write_minimal_setup(tmp, {{"threads", 4}, {"output_dir", "parallel"}});
    const RunConfig parallel = load_run_config(parallel_path);
    cmd_all(parallel);

    CHECK(serial.config_hash == parallel.config_hash);
    for (const char* m : {"model/run-manifest.json", "rankings/run-manifest.json",
                          "suite/run-manifest.json", "eval/run-manifest.json"}) {
        CHECK(testutil::read_file(tmp.path() / "serial" / m) ==
              testutil::read_file(tmp.path() / "parallel" / m));
    }
    CHECK(testutil::read_file(tmp.path() / "serial/eval/proxy/report.json") ==
          testutil::read_file(tmp.path() / "parallel/eval/proxy/report.json"));
}

TEST_CASE("the oracle target passes every robustness verdict") {
    testutil::TempDir tmp("oracle");
    json targets = json::array();
    targets.push_back(json{{"type", "local"}, {"name", "proxy"}});
    targets.push_back(json{{"type", "oracle"}, {"name", "truth"}});
    json overrides;
    overrides["evaluation"] = json{{"targets", targets}};
    const auto config_path = write_minimal_setup(tmp, overrides);
    const RunConfig config = load_run_config(config_path);
    cmd_all(config);

    const auto report =
        json::parse(testutil::read_file(tmp.path() / "run/eval/truth/report.json"));
    for (const auto& v : report.at("verdicts")) {
        CHECK(v.at("pass").get<bool>());
        CHECK(v.at("worst_mean_asr").get<double>() == 0.0);
    }
    for (const auto& cell : report.at("grid")) {
        CHECK(cell.at("asr").get<double>() == 0.0);
    }
}
