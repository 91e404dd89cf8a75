#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "evolveq/config.hpp"
#include "evolveq/errors.hpp"
#include "evolveq/experiment.hpp"
#include "evolveq/presets.hpp"

namespace {

// 0 success, 1 usage or configuration, 2 a checked invariant failed, 3 numerical failure.
constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_check = 2;
constexpr int exit_numerical = 3;

int exit_code(evolveq::ErrorKind kind)
{
    using evolveq::ErrorKind;
    switch (kind) {
    case ErrorKind::config:
    case ErrorKind::unknown_preset:
    case ErrorKind::argument:
        return exit_usage;
    default:
        return exit_numerical;
    }
}

struct RunOptions {
    std::string config;
    std::optional<std::string> out;
    std::optional<long long> seed;
    std::optional<int> threads;
};

int run(const std::string& pipeline_name, const RunOptions& opts)
{
    evolveq::ExperimentConfig config = evolveq::load_config(opts.config);
    if (opts.seed) {
        config.seed = static_cast<std::uint64_t>(*opts.seed);
    }
    if (opts.threads) {
        config.threads = *opts.threads;
    }
    const auto dir = evolveq::resolve_output_dir(opts.out, config);
    evolveq::ExperimentResult result = evolveq::run_experiment(config, evolveq::parse_pipeline(pipeline_name));
    evolveq::write_artifacts(result, dir);
    std::fputs(evolveq::summary_text(result).c_str(), stdout);
    std::fputs(fmt::format("wrote {} files to {}\n", result.files.size(), dir.string()).c_str(), stdout);
    return result.passed() ? exit_ok : exit_check;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Frozen-coefficient solver for non-autonomous parabolic problems"};
    app.require_subcommand(1);

    RunOptions opts;
    std::string chosen;
    for (const char* name : {"constants", "solve", "converge", "invariance", "all"}) {
        CLI::App* sub = app.add_subcommand(name, fmt::format("run the {} pipeline", name));
        sub->add_option("--config", opts.config, "experiment file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out, "output directory (overrides the config and EVOLVEQ_OUT)");
        sub->add_option("--seed", opts.seed, "sampling seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::Range(1, 256));
        sub->callback([&chosen, name] { chosen = name; });
    }
    app.add_subcommand("list-presets", "print the registered presets")->callback([&chosen] {
        chosen = "list-presets";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (chosen == "list-presets") {
            for (const auto& p : evolveq::list_presets()) {
                std::fputs(fmt::format("{:<20} {}\n", p.name, p.description).c_str(), stdout);
            }
            return exit_ok;
        }
        return run(chosen, opts);
    } catch (const evolveq::Error& e) {
        std::fputs(fmt::format("error[{}]: {}\n", evolveq::to_string(e.kind()), e.what()).c_str(), stderr);
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fputs(fmt::format("error[internal]: {}\n", e.what()).c_str(), stderr);
        return exit_numerical;
    }
}
