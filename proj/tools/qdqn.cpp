// Command-line front end: run experiments, list presets, rebuild aggregates.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qdqn/errors.hpp"
#include "qdqn/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::optional<fs::path> output_root() {
    if (const char *root = std::getenv("QDQN_OUTPUT_ROOT"); root && *root) {
        return fs::path(root);
    }
    return std::nullopt;
}

json load_document(const std::string &source) {
    if (source.rfind("preset:", 0) == 0) {
        try {
            return qdqn::find_preset(source.substr(7)).config;
        } catch (const std::invalid_argument &e) {
            throw qdqn::ConfigError("<preset>", e.what());
        }
    }
    std::ifstream in(source);
    if (!in) {
        throw qdqn::ConfigError("<file>", "cannot open " + source);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw qdqn::ConfigError("<file>", source + ": " + e.what());
    }
}

qdqn::ExperimentConfig prepare(const std::string &source, const std::vector<std::string> &sets) {
    json doc = load_document(source);
    for (const auto &s : sets) {
        qdqn::apply_override(doc, s);
    }
    return qdqn::parse_config(doc);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Variational-circuit deep Q-learning experiments"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> sets;
    bool quiet = false;
    auto *run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config, "config file, or preset:<name>")->required();
    run->add_option("--set", sets, "override a key, e.g. run.episodes=50");
    run->add_flag("-q,--quiet", quiet, "suppress progress output");

    std::string check_config;
    std::vector<std::string> check_sets;
    auto *validate = app.add_subcommand("validate", "check a config and print its effective form");
    validate->add_option("config", check_config, "config file, or preset:<name>")->required();
    validate->add_option("--set", check_sets, "override a key");

    std::string write_dir;
    std::string show;
    auto *list = app.add_subcommand("presets", "list bundled experiment configs");
    list->add_option("--write", write_dir, "write every preset as <dir>/<name>.json");
    list->add_option("--show", show, "print one preset");

    std::string agg_dir;
    auto *aggregate = app.add_subcommand("aggregate", "rebuild aggregate tables from agent logs");
    aggregate->add_option("dir", agg_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) {
            const auto cfg = prepare(config, sets);
            qdqn::run_config(cfg, output_root(), quiet ? nullptr : &std::cerr);
        } else if (*validate) {
            const auto cfg = prepare(check_config, check_sets);
            std::cout << cfg.effective.dump(2) << '\n';
        } else if (*list) {
            if (!show.empty()) {
                std::cout << qdqn::find_preset(show).config.dump(2) << '\n';
            } else if (!write_dir.empty()) {
                fs::create_directories(write_dir);
                for (const auto &p : qdqn::presets()) {
                    std::ofstream out(fs::path(write_dir) / (p.name + ".json"));
                    out << p.config.dump(2) << '\n';
                }
            } else {
                for (const auto &p : qdqn::presets()) {
                    std::cout << p.name << "\t" << p.description << '\n';
                }
            }
        } else if (*aggregate) {
            const auto n = qdqn::aggregate_directory(agg_dir);
            std::cerr << "aggregated " << n << " director" << (n == 1 ? "y" : "ies") << '\n';
        }
    } catch (const qdqn::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const qdqn::TrainingAborted &e) {
        std::cerr << "training aborted: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
