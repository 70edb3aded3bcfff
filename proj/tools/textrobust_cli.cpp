#include <cstdio>
#include <exception>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "textrobust/logging.hpp"
#include "textrobust/orchestrator.hpp"
#include "textrobust/version.hpp"

namespace {

using textrobust::RunConfig;

int run_command(const std::string& config_path, int verbosity,
                const std::function<void(const RunConfig&)>& command) {
    using namespace textrobust;
    set_log_level(verbosity >= 2   ? LogLevel::debug
                  : verbosity == 1 ? LogLevel::info
                                   : LogLevel::warn);
    try {
        const RunConfig config = load_run_config(config_path);
        command(config);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robustness evaluation of text classifiers under targeted perturbations"};
    app.set_version_flag("--version", textrobust::kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    int verbosity = 0;

    struct Command {
        const char* name;
        const char* help;
        void (*fn)(const RunConfig&);
    };
    const Command commands[] = {
        {"train", "train the proxy model and write a checkpoint", &textrobust::cmd_train},
        {"rank", "compute attributions and word-importance rankings", &textrobust::cmd_rank},
        {"perturb", "generate the perturbed dataset suite", &textrobust::cmd_perturb},
        {"eval", "evaluate targets and emit the robustness report", &textrobust::cmd_eval},
        {"all", "run train, rank, perturb and eval in order", &textrobust::cmd_all},
        {"validate-config", "parse and validate the configuration file", nullptr},
    };

    for (const Command& cmd : commands) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("-c,--config", config_path, "run configuration JSON")->required();
        sub->add_flag("-v,--verbose", verbosity, "increase log verbosity (stderr)");
        auto fn = cmd.fn;
        sub->callback([&, fn]() {
            const int rc = fn ? run_command(config_path, verbosity, fn)
                              : run_command(config_path, verbosity, [](const RunConfig&) {
                                    std::printf("config OK\n");
                                });
            if (rc != 0) std::exit(rc);
        });
    }

    CLI11_PARSE(app, argc, argv);
    return 0;
}
