#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "textrobust/attribution.hpp"
#include "textrobust/corpus.hpp"
#include "textrobust/evaluation.hpp"
#include "textrobust/perturbation.hpp"
#include "textrobust/proxy_model.hpp"

namespace textrobust {

// configuration problems exit with code 1; runtime failures with 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TargetSpec {
    enum class Type { local, oracle, remote };
    Type type = Type::local;
    std::string name;
    RemoteTargetConfig remote;
};

// One JSON file drives the whole pipeline; relative paths resolve against
// the config file's directory.
struct RunConfig {
    std::filesystem::path config_dir;
    std::string config_hash;  // canonical config minus execution-only knobs

    std::filesystem::path dataset_path;
    DatasetSchema schema;

    std::size_t vocab_max_size = 4096;
    std::uint32_t hash_buckets = 2048;

    ModelConfig model;
    bool model_seed_explicit = false;

    std::vector<std::string> methods;  // attribution kind names plus "random"
    AttributionParams attribution;
    bool rank_abs = false;

    std::vector<PerturbationKind> kinds;
    std::vector<int> n_values;  // defaults to 1..10
    std::filesystem::path resource_pack;

    std::vector<TargetSpec> targets;
    double threshold = 0.05;

    std::uint64_t seed = 1;
    int threads = 1;  // 0 = hardware default; never affects output bytes
    std::filesystem::path out_dir;
};

RunConfig load_run_config(const std::filesystem::path& path);

void cmd_train(const RunConfig& config);
void cmd_rank(const RunConfig& config);
void cmd_perturb(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_all(const RunConfig& config);

// rankings/<method>.jsonl reader (the perturb stage's input)
std::map<std::string, WordRanking> load_rankings_file(const std::filesystem::path& path);

}  // namespace textrobust
