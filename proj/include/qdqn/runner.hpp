#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdqn/dqn.hpp"
#include "qdqn/metrics.hpp"
#include "qdqn/supervised.hpp"

namespace qdqn {

enum class ExperimentKind { RlTrain, BpScan, Supervised };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string &s);
std::string to_string(InitScheme s);
InitScheme init_scheme_from_string(const std::string &s);

struct RunSection {
    std::size_t agents = 10;
    std::size_t episodes = 500;
    std::uint64_t seed = 0;
    std::string output_dir = "runs";
    /// Worker threads; 0 means one per agent.
    std::size_t parallelism = 0;
    /// Smoothing window of the per-update aggregate curves.
    std::size_t window = 100;
    bool keep_gradients = true;
};

struct BpSection {
    std::vector<std::size_t> qubits;
    std::size_t samples = 1000;
};

struct SupervisedSection {
    std::vector<std::size_t> qubits;
    std::size_t epochs = 50;
    std::size_t samples = 500;
    double train_fraction = 0.8;
};

/// One fully resolved experiment (a single variant).
struct Experiment {
    std::string name;
    ExperimentKind kind = ExperimentKind::RlTrain;
    TrainConfig train;
    RunSection run;
    BpSection bp;
    SupervisedSection supervised;

    /// Standalone config that reproduces this experiment.
    nlohmann::json to_json() const;
};

/// A parsed config file: one entry per variant, or a single experiment.
struct ExperimentConfig {
    std::string name;
    std::vector<Experiment> experiments;
    /// Whether outputs go to per-variant subdirectories.
    bool has_variants = false;
    std::filesystem::path output_dir;
    /// The input with every section materialized.
    nlohmann::json effective;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json &doc);
ExperimentConfig load_config(const std::filesystem::path &path);

/// Sets a dotted key (e.g. "run.episodes") to a JSON-parsed value.
void apply_override(nlohmann::json &doc, const std::string &assignment);

/// Relative output directories are resolved under `root` when given.
std::filesystem::path resolve_output(const std::string &dir,
                                     const std::optional<std::filesystem::path> &root);

/// Runs every experiment and writes logs, aggregates and config echoes.
/// Progress lines go to `log` when non-null.
void run_config(const ExperimentConfig &cfg, const std::optional<std::filesystem::path> &root,
                std::ostream *log = nullptr);

/// Rebuilds aggregate tables from the per-agent logs under `dir` (recursively).
/// Returns the number of directories aggregated.
std::size_t aggregate_directory(const std::filesystem::path &dir);

// Serialization shared by the runner and the aggregate command.
void write_episodes_csv(const std::filesystem::path &p, const RunLog &log);
void write_updates_csv(const std::filesystem::path &p, const RunLog &log);
RunLog read_run_log(const std::filesystem::path &dir, std::size_t agent);
void write_curve_csv(const std::filesystem::path &p, const std::vector<std::string> &header,
                     const AggregateCurve &c);
void write_bp_tables(const std::filesystem::path &dir, const std::vector<BpPoint> &points);

struct Preset {
    std::string name;
    std::string description;
    nlohmann::json config;
};

const std::vector<Preset> &presets();
const Preset &find_preset(const std::string &name);

} // namespace qdqn
