#include "qdqn/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/os.h>

#include "qdqn/errors.hpp"

namespace qdqn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::RlTrain:
        return "rl-train";
    case ExperimentKind::BpScan:
        return "bp-scan";
    case ExperimentKind::Supervised:
        return "supervised";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(const std::string &s) {
    if (s == "rl-train") {
        return ExperimentKind::RlTrain;
    }
    if (s == "bp-scan") {
        return ExperimentKind::BpScan;
    }
    if (s == "supervised") {
        return ExperimentKind::Supervised;
    }
    throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

std::string to_string(InitScheme s) {
    return s == InitScheme::Default ? "default" : "uniform-2pi";
}

InitScheme init_scheme_from_string(const std::string &s) {
    if (s == "default") {
        return InitScheme::Default;
    }
    if (s == "uniform-2pi") {
        return InitScheme::Uniform2Pi;
    }
    throw std::invalid_argument("unknown init scheme '" + s + "'");
}

namespace {

const std::set<std::string> kTopKeys = {"name",     "experiment", "env",        "model",
                                        "hyperparameters", "run",  "bp_scan", "supervised",
                                        "variants"};
const std::set<std::string> kModelKeys = {"family",         "qubits",   "layers",
                                          "reupload",       "input_scaling", "output_scaling",
                                          "encoding",       "entangle", "observables"};
const std::set<std::string> kHyperKeys = {"gamma",      "lr_rotational", "lr_input",
                                          "lr_output",  "batch_size",    "eps_init",
                                          "eps_decay",  "eps_min",       "update_model",
                                          "update_target", "buffer_size", "init"};
const std::set<std::string> kRunKeys = {"agents",      "episodes",        "seed",
                                        "output_dir",  "parallelism",     "window",
                                        "keep_gradients", "solve_threshold", "solve_window"};
const std::set<std::string> kBpKeys = {"qubits", "samples"};
const std::set<std::string> kSupervisedKeys = {"qubits", "epochs", "samples", "train_fraction"};

bool is_count(const json &v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

/// Typed access to a JSON object with field paths in error messages.
class Section {
  public:
    Section(const json &doc, std::string path, const std::set<std::string> &allowed)
        : path_(std::move(path)) {
        if (doc.is_null()) {
            node_ = json::object();
            return;
        }
        if (!doc.is_object()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
        }
        node_ = doc;
        for (const auto &[key, _] : doc.items()) {
            if (!allowed.count(key)) {
                throw ConfigError(field(key), "unknown key");
            }
        }
    }

    std::string field(const std::string &key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(const std::string &key) const { return node_.contains(key); }
    const json &raw(const std::string &key) const { return node_.at(key); }

    std::size_t count(const std::string &key, std::size_t def) const {
        if (!has(key)) {
            return def;
        }
        const auto &v = raw(key);
        if (!is_count(v)) {
            throw ConfigError(field(key), "must be a non-negative integer");
        }
        return v.get<std::size_t>();
    }

    double real(const std::string &key, double def) const {
        if (!has(key)) {
            return def;
        }
        const auto &v = raw(key);
        if (!v.is_number()) {
            throw ConfigError(field(key), "must be a number");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw ConfigError(field(key), "must be finite");
        }
        return d;
    }

    bool flag(const std::string &key, bool def) const {
        if (!has(key)) {
            return def;
        }
        if (!raw(key).is_boolean()) {
            throw ConfigError(field(key), "must be true or false");
        }
        return raw(key).get<bool>();
    }

    std::string text(const std::string &key, const std::string &def) const {
        if (!has(key)) {
            return def;
        }
        if (!raw(key).is_string()) {
            throw ConfigError(field(key), "must be a string");
        }
        return raw(key).get<std::string>();
    }

    template <class Parse>
    auto choice(const std::string &key, const std::string &def, Parse parse) const {
        const std::string s = text(key, def);
        try {
            return parse(s);
        } catch (const std::invalid_argument &e) {
            throw ConfigError(field(key), e.what());
        }
    }

    std::vector<std::size_t> counts(const std::string &key) const {
        if (!has(key)) {
            throw ConfigError(field(key), "is required");
        }
        const auto &v = raw(key);
        if (!v.is_array() || v.empty()) {
            throw ConfigError(field(key), "must be a non-empty array of integers");
        }
        std::vector<std::size_t> out;
        for (const auto &e : v) {
            if (!is_count(e) || e.get<std::size_t>() == 0) {
                throw ConfigError(field(key), "entries must be positive integers");
            }
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }

  private:
    json node_;
    std::string path_;
};

bool valid_name(const std::string &s) {
    return !s.empty() && s != "." && s != ".." &&
           std::all_of(s.begin(), s.end(), [](char c) {
               return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                      c == '.';
           });
}

void check_model(const ModelConfig &m, EnvId env, std::size_t feature_dim) {
    try {
        (void)build_model(m, env, feature_dim);
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw ConfigError("model", e.what());
    }
}

Experiment resolve(const json &doc, const std::string &variant, const std::string &config_name) {
    const Section top(doc, "", kTopKeys);
    Experiment ex;
    ex.name = variant.empty() ? config_name : variant;
    ex.kind = top.choice("experiment", "rl-train", experiment_kind_from_string);
    const EnvId env = top.choice("env", "cartpole", env_from_string);

    TrainConfig t = TrainConfig::defaults(env);
    if (ex.kind == ExperimentKind::Supervised) {
        t.batch_size = 32;
    }

    const Section model(top.has("model") ? top.raw("model") : json(), "model", kModelKeys);
    ModelConfig &m = t.model;
    m.family = model.choice("family", to_string(m.family), family_from_string);
    m.qubits = model.count("qubits", m.qubits);
    m.layers = model.count("layers", m.layers);
    m.reupload = model.flag("reupload", m.reupload);
    m.input_scaling = model.choice("input_scaling", to_string(m.input_scaling), scaling_from_string);
    m.output_scaling =
        model.choice("output_scaling", to_string(m.output_scaling), scaling_from_string);
    m.encoding = model.choice("encoding", to_string(m.encoding), encoding_from_string);
    m.entangle = model.flag("entangle", m.entangle);
    if (model.has("observables")) {
        const auto &o = model.raw("observables");
        if (o.is_string()) {
            m.observable_kind = model.choice("observables", "local", observable_kind_from_string);
        } else if (o.is_array() && !o.empty()) {
            for (const auto &term : o) {
                if (!term.is_array() || term.empty()) {
                    throw ConfigError("model.observables",
                                      "each observable must be a non-empty qubit list");
                }
                std::vector<std::size_t> qs;
                for (const auto &q : term) {
                    if (!is_count(q)) {
                        throw ConfigError("model.observables", "qubit indices must be integers");
                    }
                    qs.push_back(q.get<std::size_t>());
                }
                m.observables.push_back(std::move(qs));
            }
        } else {
            throw ConfigError("model.observables",
                              "must be \"local\", \"global\" or a list of qubit lists");
        }
    }
    if (m.qubits == 0) {
        throw ConfigError("model.qubits", "must be >= 1");
    }
    if (m.layers == 0) {
        throw ConfigError("model.layers", "must be >= 1");
    }

    const Section hyper(top.has("hyperparameters") ? top.raw("hyperparameters") : json(),
                        "hyperparameters", kHyperKeys);
    t.gamma = hyper.real("gamma", t.gamma);
    t.lr.rotational = hyper.real("lr_rotational", t.lr.rotational);
    t.lr.input = hyper.real("lr_input", t.lr.input);
    t.lr.output = hyper.real("lr_output", t.lr.output);
    t.batch_size = hyper.count("batch_size", t.batch_size);
    t.eps_init = hyper.real("eps_init", t.eps_init);
    t.eps_decay = hyper.real("eps_decay", t.eps_decay);
    t.eps_min = hyper.real("eps_min", t.eps_min);
    t.update_model = hyper.count("update_model", t.update_model);
    t.update_target = hyper.count("update_target", t.update_target);
    t.buffer_size = hyper.count("buffer_size", t.buffer_size);
    t.init = hyper.choice("init", to_string(t.init), init_scheme_from_string);

    const Section run(top.has("run") ? top.raw("run") : json(), "run", kRunKeys);
    RunSection &r = ex.run;
    r.agents = run.count("agents", r.agents);
    r.episodes = run.count("episodes", t.episodes);
    r.seed = run.count("seed", r.seed);
    r.output_dir = run.text("output_dir", "runs/" + config_name);
    r.parallelism = run.count("parallelism", r.parallelism);
    r.window = run.count("window", r.window);
    r.keep_gradients = run.flag("keep_gradients", r.keep_gradients);
    if (run.has("solve_threshold")) {
        if (run.raw("solve_threshold").is_null()) {
            t.solve_threshold.reset();
        } else {
            t.solve_threshold = run.real("solve_threshold", 0.0);
        }
    }
    t.solve_window = run.count("solve_window", t.solve_window);
    if (r.output_dir.empty()) {
        throw ConfigError("run.output_dir", "must not be empty");
    }
    if (r.window == 0) {
        throw ConfigError("run.window", "must be >= 1");
    }
    t.agents = r.agents;
    t.episodes = r.episodes;
    t.seed = r.seed;
    t.keep_gradients = r.keep_gradients;

    // Re-label TrainConfig field errors with their section.
    try {
        t.validate();
    } catch (const ConfigError &e) {
        const std::string f = e.field();
        const std::string section = kHyperKeys.count(f)   ? "hyperparameters."
                                    : kModelKeys.count(f) ? "model."
                                                          : "run.";
        const std::string what = e.what();
        throw ConfigError(section + f, what.substr(what.find(": ") + 2));
    }

    if (top.has("bp_scan") && ex.kind != ExperimentKind::BpScan) {
        throw ConfigError("bp_scan", "only valid for bp-scan experiments");
    }
    if (top.has("supervised") && ex.kind != ExperimentKind::Supervised) {
        throw ConfigError("supervised", "only valid for supervised experiments");
    }

    switch (ex.kind) {
    case ExperimentKind::RlTrain:
        if (r.episodes == 0) {
            throw ConfigError("run.episodes", "must be >= 1");
        }
        check_model(m, env, make_environment(env)->observation_dim());
        break;
    case ExperimentKind::BpScan: {
        const Section bp(top.has("bp_scan") ? top.raw("bp_scan") : json(), "bp_scan", kBpKeys);
        ex.bp.qubits = bp.counts("qubits");
        ex.bp.samples = bp.count("samples", ex.bp.samples);
        if (ex.bp.samples < 2) {
            throw ConfigError("bp_scan.samples", "must be >= 2");
        }
        for (const auto n : ex.bp.qubits) {
            ModelConfig mn = m;
            mn.qubits = n;
            check_model(mn, EnvId::CartPole, 4);
        }
        break;
    }
    case ExperimentKind::Supervised: {
        const Section sup(top.has("supervised") ? top.raw("supervised") : json(), "supervised",
                          kSupervisedKeys);
        ex.supervised.qubits = sup.counts("qubits");
        ex.supervised.epochs = sup.count("epochs", ex.supervised.epochs);
        ex.supervised.samples = sup.count("samples", ex.supervised.samples);
        ex.supervised.train_fraction = sup.real("train_fraction", ex.supervised.train_fraction);
        if (ex.supervised.epochs == 0) {
            throw ConfigError("supervised.epochs", "must be >= 1");
        }
        if (ex.supervised.samples < 10) {
            throw ConfigError("supervised.samples", "must be >= 10");
        }
        if (!(ex.supervised.train_fraction > 0.0 && ex.supervised.train_fraction < 1.0)) {
            throw ConfigError("supervised.train_fraction", "must lie in (0, 1)");
        }
        for (const auto n : ex.supervised.qubits) {
            if (n < 2) {
                throw ConfigError("supervised.qubits", "needs at least 2 features");
            }
            ModelConfig mn = m;
            mn.qubits = n;
            try {
                (void)supervised_model(mn, n);
            } catch (const std::invalid_argument &e) {
                throw ConfigError("model", e.what());
            }
        }
        break;
    }
    }
    ex.train = t;
    return ex;
}

} // namespace

json Experiment::to_json() const {
    const ModelConfig &m = train.model;
    json model = {{"family", to_string(m.family)},
                  {"qubits", m.qubits},
                  {"layers", m.layers},
                  {"reupload", m.reupload},
                  {"input_scaling", to_string(m.input_scaling)},
                  {"output_scaling", to_string(m.output_scaling)},
                  {"encoding", to_string(m.encoding)},
                  {"entangle", m.entangle}};
    if (m.observables.empty()) {
        model["observables"] = to_string(m.observable_kind);
    } else {
        model["observables"] = m.observables;
    }
    json doc = {
        {"name", name},
        {"experiment", to_string(kind)},
        {"env", to_string(train.env)},
        {"model", model},
        {"hyperparameters",
         {{"gamma", train.gamma},
          {"lr_rotational", train.lr.rotational},
          {"lr_input", train.lr.input},
          {"lr_output", train.lr.output},
          {"batch_size", train.batch_size},
          {"eps_init", train.eps_init},
          {"eps_decay", train.eps_decay},
          {"eps_min", train.eps_min},
          {"update_model", train.update_model},
          {"update_target", train.update_target},
          {"buffer_size", train.buffer_size},
          {"init", to_string(train.init)}}},
        {"run",
         {{"agents", run.agents},
          {"episodes", run.episodes},
          {"seed", run.seed},
          {"output_dir", run.output_dir},
          {"parallelism", run.parallelism},
          {"window", run.window},
          {"keep_gradients", run.keep_gradients},
          {"solve_threshold",
           train.solve_threshold ? json(*train.solve_threshold) : json(nullptr)},
          {"solve_window", train.solve_window}}}};
    if (kind == ExperimentKind::BpScan) {
        doc["bp_scan"] = {{"qubits", bp.qubits}, {"samples", bp.samples}};
    }
    if (kind == ExperimentKind::Supervised) {
        doc["supervised"] = {{"qubits", supervised.qubits},
                             {"epochs", supervised.epochs},
                             {"samples", supervised.samples},
                             {"train_fraction", supervised.train_fraction}};
    }
    return doc;
}

ExperimentConfig parse_config(const json &doc) {
    if (!doc.is_object()) {
        throw ConfigError("<root>", "config must be a JSON object");
    }
    for (const auto &[key, _] : doc.items()) {
        if (!kTopKeys.count(key)) {
            throw ConfigError(key, "unknown key");
        }
    }
    ExperimentConfig cfg;
    if (doc.contains("name") && !doc["name"].is_string()) {
        throw ConfigError("name", "must be a string");
    }
    cfg.name = doc.value("name", std::string("experiment"));
    if (!valid_name(cfg.name)) {
        throw ConfigError("name", "must be a non-empty identifier of [A-Za-z0-9._-]");
    }
    json base = doc;
    base.erase("variants");

    if (!doc.contains("variants")) {
        Experiment ex = resolve(base, "", cfg.name);
        cfg.output_dir = ex.run.output_dir;
        cfg.effective = ex.to_json();
        cfg.experiments.push_back(std::move(ex));
        return cfg;
    }

    const auto &variants = doc["variants"];
    if (!variants.is_array() || variants.empty()) {
        throw ConfigError("variants", "must be a non-empty array");
    }
    cfg.has_variants = true;
    cfg.effective = {{"name", cfg.name}, {"variants", json::array()}};
    std::set<std::string> seen;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto &v = variants[i];
        const std::string where = "variants[" + std::to_string(i) + "]";
        if (!v.is_object()) {
            throw ConfigError(where, "must be an object");
        }
        for (const auto &[key, _] : v.items()) {
            if (key != "name" && key != "set") {
                throw ConfigError(where + "." + key, "unknown key");
            }
        }
        if (!v.contains("name") || !v["name"].is_string() ||
            !valid_name(v["name"].get<std::string>())) {
            throw ConfigError(where + ".name", "must be a non-empty identifier of [A-Za-z0-9._-]");
        }
        const std::string vname = v["name"].get<std::string>();
        if (!seen.insert(vname).second) {
            throw ConfigError(where + ".name", "duplicate variant '" + vname + "'");
        }
        json merged = base;
        if (v.contains("set")) {
            if (!v["set"].is_object()) {
                throw ConfigError(where + ".set", "must be an object");
            }
            if (v["set"].contains("variants") || v["set"].contains("name")) {
                throw ConfigError(where + ".set", "may not override name or variants");
            }
            merged.merge_patch(v["set"]);
        }
        Experiment ex;
        try {
            ex = resolve(merged, vname, cfg.name);
        } catch (const ConfigError &e) {
            const std::string what = e.what();
            throw ConfigError(where + "(" + vname + ")." + e.field(),
                              what.substr(what.find(": ") + 2));
        }
        json set = ex.to_json();
        set.erase("name");
        cfg.effective["variants"].push_back({{"name", vname}, {"set", set}});
        cfg.experiments.push_back(std::move(ex));
    }
    if (base.contains("run") && base["run"].is_object() && base["run"].contains("output_dir") &&
        base["run"]["output_dir"].is_string()) {
        cfg.output_dir = base["run"]["output_dir"].get<std::string>();
    } else {
        cfg.output_dir = "runs/" + cfg.name;
    }
    cfg.effective["run"] = {{"output_dir", cfg.output_dir.generic_string()}};
    return cfg;
}

ExperimentConfig load_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("<file>", "cannot open " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError("<file>", path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

void apply_override(json &doc, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError(assignment, "override must look like section.key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error &) {
        parsed = value; // bare strings
    }
    json *node = &doc;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i])) {
            (*node)[parts[i]] = json::object();
        }
        node = &(*node)[parts[i]];
        if (!node->is_object()) {
            throw ConfigError(key, "is not a section");
        }
    }
    (*node)[parts.back()] = parsed;
    // Overrides take precedence over variant patches too.
    if (doc.contains("variants") && doc["variants"].is_array() && parts.front() != "variants") {
        for (auto &v : doc["variants"]) {
            if (!v.is_object() || !v.contains("set")) {
                continue;
            }
            json *vn = &v["set"];
            bool present = true;
            for (std::size_t i = 0; i + 1 < parts.size() && present; ++i) {
                present = vn->is_object() && vn->contains(parts[i]);
                if (present) {
                    vn = &(*vn)[parts[i]];
                }
            }
            if (present && vn->is_object() && vn->contains(parts.back())) {
                (*vn)[parts.back()] = parsed;
            }
        }
    }
}

fs::path resolve_output(const std::string &dir, const std::optional<fs::path> &root) {
    const fs::path p(dir);
    if (root && p.is_relative()) {
        return *root / p;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::ofstream open_out(const fs::path &p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + p.string());
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p, const std::string &header_start) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + p.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind(header_start, 0) != 0) {
        throw std::runtime_error(p.string() + ": unexpected header");
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_double(const std::string &s, const fs::path &p) {
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error(p.string() + ": bad number '" + s + "'");
    }
    return v;
}

std::size_t to_count(const std::string &s, const fs::path &p) {
    char *end = nullptr;
    const auto v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error(p.string() + ": bad integer '" + s + "'");
    }
    return static_cast<std::size_t>(v);
}

void write_json(const fs::path &p, const json &j) {
    auto out = open_out(p);
    out << j.dump(2) << '\n';
}

fs::path agent_file(const fs::path &dir, std::size_t k, const char *suffix) {
    return dir / fmt::format("agent_{}_{}", k, suffix);
}

std::size_t count_agents(const fs::path &dir, const char *suffix) {
    std::size_t k = 0;
    while (fs::exists(agent_file(dir, k, suffix))) {
        ++k;
    }
    return k;
}

std::size_t window_of(const fs::path &dir) {
    const fs::path p = dir / "effective_config.json";
    if (!fs::exists(p)) {
        return 100;
    }
    std::ifstream in(p);
    const json j = json::parse(in, nullptr, false);
    if (j.is_object() && j.contains("run") && j["run"].is_object() &&
        j["run"].contains("window") && is_count(j["run"]["window"])) {
        return std::max<std::size_t>(1, j["run"]["window"].get<std::size_t>());
    }
    return 100;
}

double final_window_mean(const std::vector<double> &v, std::size_t window) {
    if (v.empty()) {
        return 0.0;
    }
    const std::size_t n = std::min(window, v.size());
    double s = 0.0;
    for (std::size_t i = v.size() - n; i < v.size(); ++i) {
        s += v[i];
    }
    return s / static_cast<double>(n);
}

} // namespace

void write_episodes_csv(const fs::path &p, const RunLog &log) {
    auto out = open_out(p);
    out << "episode,return\n";
    for (std::size_t e = 0; e < log.returns.size(); ++e) {
        out << fmt::format("{},{}\n", e, log.returns[e]);
    }
}

void write_updates_csv(const fs::path &p, const RunLog &log) {
    auto out = open_out(p);
    std::size_t width = 0;
    for (const auto &u : log.updates) {
        width = std::max(width, u.gradient.size());
    }
    out << "update,step,episode,loss,grad_norm";
    for (std::size_t i = 0; i < width; ++i) {
        out << fmt::format(",g{}", i);
    }
    out << '\n';
    for (std::size_t i = 0; i < log.updates.size(); ++i) {
        const auto &u = log.updates[i];
        out << fmt::format("{},{},{},{},{}", i, u.step, u.episode, u.loss, u.grad_norm);
        for (const double g : u.gradient) {
            out << fmt::format(",{}", g);
        }
        out << '\n';
    }
}

RunLog read_run_log(const fs::path &dir, std::size_t agent) {
    RunLog log;
    const fs::path ep = agent_file(dir, agent, "episodes.csv");
    for (const auto &row : read_csv(ep, "episode,return")) {
        if (row.size() != 2) {
            throw std::runtime_error(ep.string() + ": expected 2 columns");
        }
        log.returns.push_back(to_double(row[1], ep));
    }
    const fs::path up = agent_file(dir, agent, "updates.csv");
    for (const auto &row : read_csv(up, "update,step,episode,loss,grad_norm")) {
        if (row.size() < 5) {
            throw std::runtime_error(up.string() + ": expected at least 5 columns");
        }
        UpdateRecord r;
        r.step = to_count(row[1], up);
        r.episode = to_count(row[2], up);
        r.loss = to_double(row[3], up);
        r.grad_norm = to_double(row[4], up);
        for (std::size_t i = 5; i < row.size(); ++i) {
            r.gradient.push_back(to_double(row[i], up));
        }
        log.updates.push_back(std::move(r));
    }
    const fs::path meta = agent_file(dir, agent, "meta.json");
    if (fs::exists(meta)) {
        std::ifstream in(meta);
        const json j = json::parse(in);
        if (j.contains("solved_episode") && !j["solved_episode"].is_null()) {
            log.solved_episode = j["solved_episode"].get<std::size_t>();
        }
        log.total_steps = j.value("total_steps", std::size_t{0});
    }
    return log;
}

void write_curve_csv(const fs::path &p, const std::vector<std::string> &header,
                     const AggregateCurve &c) {
    if (header.size() != 3) {
        throw std::invalid_argument("write_curve_csv: header needs 3 columns");
    }
    auto out = open_out(p);
    out << fmt::format("{},{},{}\n", header[0], header[1], header[2]);
    for (std::size_t i = 0; i < c.size(); ++i) {
        out << fmt::format("{},{},{}\n", c.x[i], c.mean[i], c.spread[i]);
    }
}

void write_bp_tables(const fs::path &dir, const std::vector<BpPoint> &points) {
    std::optional<DecayFits> fits;
    std::vector<std::pair<double, double>> xy;
    for (const auto &p : points) {
        xy.emplace_back(static_cast<double>(p.qubits), p.variance);
    }
    try {
        fits = fit_decay(xy);
    } catch (const std::invalid_argument &) {
        // Too few or degenerate points: the table is written without fits.
    }
    auto out = open_out(dir / "bp.csv");
    out << "qubits,variance,exp_r2,poly_r2\n";
    for (const auto &p : points) {
        if (fits) {
            out << fmt::format("{},{},{},{}\n", p.qubits, p.variance, fits->exponential.r_squared,
                               fits->polynomial.r_squared);
        } else {
            out << fmt::format("{},{},,\n", p.qubits, p.variance);
        }
    }
    json j;
    j["points"] = json::array();
    for (const auto &p : points) {
        j["points"].push_back(
            {{"qubits", p.qubits}, {"variance", p.variance}, {"mean_norm", p.mean_norm}});
    }
    if (fits) {
        for (const auto *f : {&fits->exponential, &fits->polynomial}) {
            j[f->model == DecayModel::Exponential ? "exponential" : "polynomial"] = {
                {"slope", f->slope}, {"intercept", f->intercept}, {"r_squared", f->r_squared}};
        }
    } else {
        j["exponential"] = nullptr;
        j["polynomial"] = nullptr;
    }
    write_json(dir / "fits.json", j);
}

// ---------------------------------------------------------------------------
// Aggregation from files on disk

namespace {

void aggregate_rl(const fs::path &dir) {
    const std::size_t n = count_agents(dir, "episodes.csv");
    std::vector<RunLog> logs;
    for (std::size_t k = 0; k < n; ++k) {
        logs.push_back(read_run_log(dir, k));
    }
    const std::size_t window = window_of(dir);
    write_curve_csv(dir / "returns.csv", {"episode", "mean_return", "std_return"},
                    aggregate_returns(logs));
    write_curve_csv(dir / "gradients.csv", {"step", "mean_norm", "var_norm"},
                    aggregate_gradients(logs, window));
    write_curve_csv(dir / "losses.csv", {"step", "mean_loss", "std_loss"},
                    aggregate_losses(logs, window));
    json s;
    s["agents"] = n;
    s["window"] = window;
    s["solved_episode"] = json::array();
    s["final_window_mean_return"] = json::array();
    double total = 0.0;
    std::size_t solved = 0;
    for (const auto &l : logs) {
        s["solved_episode"].push_back(l.solved_episode ? json(*l.solved_episode) : json(nullptr));
        const double f = final_window_mean(l.returns, window);
        s["final_window_mean_return"].push_back(f);
        total += f;
        solved += l.solved_episode ? 1 : 0;
    }
    s["agents_solved"] = solved;
    s["mean_final_window_return"] = n ? total / static_cast<double>(n) : 0.0;
    write_json(dir / "summary.json", s);
}

struct EpochLog {
    std::vector<double> train, validation, loss;
};

EpochLog read_epochs(const fs::path &p) {
    EpochLog e;
    for (const auto &row : read_csv(p, "epoch,train_accuracy,validation_accuracy,loss")) {
        if (row.size() != 4) {
            throw std::runtime_error(p.string() + ": expected 4 columns");
        }
        e.train.push_back(to_double(row[1], p));
        e.validation.push_back(to_double(row[2], p));
        e.loss.push_back(to_double(row[3], p));
    }
    return e;
}

struct SupervisedSummary {
    double final_train = 0.0;
    double final_validation = 0.0;
    double initial_grad_norm = 0.0;
    double peak_grad_norm = 0.0;
};

SupervisedSummary aggregate_supervised_width(const fs::path &dir) {
    const std::size_t n = count_agents(dir, "epochs.csv");
    std::vector<RunLog> logs;
    std::vector<EpochLog> epochs;
    for (std::size_t k = 0; k < n; ++k) {
        epochs.push_back(read_epochs(agent_file(dir, k, "epochs.csv")));
        RunLog l;
        l.returns = epochs.back().validation;
        const fs::path up = agent_file(dir, k, "updates.csv");
        for (const auto &row : read_csv(up, "update,step,episode,loss,grad_norm")) {
            UpdateRecord r;
            r.step = to_count(row.at(1), up);
            r.episode = to_count(row.at(2), up);
            r.loss = to_double(row.at(3), up);
            r.grad_norm = to_double(row.at(4), up);
            l.updates.push_back(std::move(r));
        }
        logs.push_back(std::move(l));
    }
    const std::size_t window = window_of(dir.parent_path());
    const std::size_t m = epochs.empty() ? 0 : epochs.front().train.size();
    auto out = open_out(dir / "accuracy.csv");
    out << "epoch,mean_train,std_train,mean_validation,std_validation,mean_loss\n";
    SupervisedSummary s;
    for (std::size_t e = 0; e < m; ++e) {
        std::vector<double> tr, va, lo;
        for (const auto &ep : epochs) {
            tr.push_back(ep.train.at(e));
            va.push_back(ep.validation.at(e));
            lo.push_back(ep.loss.at(e));
        }
        out << fmt::format("{},{},{},{},{},{}\n", e, mean_of(tr), std::sqrt(population_variance(tr)),
                           mean_of(va), std::sqrt(population_variance(va)), mean_of(lo));
        s.final_train = mean_of(tr);
        s.final_validation = mean_of(va);
    }
    const auto grads = aggregate_gradients(logs, window);
    write_curve_csv(dir / "gradients.csv", {"step", "mean_norm", "var_norm"}, grads);
    write_curve_csv(dir / "losses.csv", {"step", "mean_loss", "std_loss"},
                    aggregate_losses(logs, window));
    if (grads.size()) {
        s.initial_grad_norm = grads.mean.front();
        s.peak_grad_norm = *std::max_element(grads.mean.begin(), grads.mean.end());
    }
    return s;
}

bool is_width_dir(const fs::path &p) {
    return fs::is_directory(p) && fs::exists(p / "agent_0_epochs.csv");
}

void aggregate_supervised_root(const fs::path &dir) {
    std::map<std::size_t, fs::path> widths;
    for (const auto &e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() > 1 && name[0] == 'n' && is_width_dir(e.path())) {
            widths[to_count(name.substr(1), e.path())] = e.path();
        }
    }
    auto out = open_out(dir / "supervised.csv");
    out << "qubits,final_train,final_validation,initial_grad_norm,peak_grad_norm\n";
    for (const auto &[n, p] : widths) {
        const auto s = aggregate_supervised_width(p);
        out << fmt::format("{},{},{},{},{}\n", n, s.final_train, s.final_validation,
                           s.initial_grad_norm, s.peak_grad_norm);
    }
}

void aggregate_bp(const fs::path &dir) {
    const fs::path p = dir / "bp_norms.csv";
    std::map<std::size_t, std::vector<double>> norms;
    for (const auto &row : read_csv(p, "qubits,sample,norm")) {
        if (row.size() != 3) {
            throw std::runtime_error(p.string() + ": expected 3 columns");
        }
        norms[to_count(row[0], p)].push_back(to_double(row[2], p));
    }
    std::vector<BpPoint> points;
    for (auto &[n, v] : norms) {
        points.push_back(summarize_norms(n, std::move(v)));
    }
    write_bp_tables(dir, points);
}

bool aggregate_one(const fs::path &dir) {
    if (fs::exists(agent_file(dir, 0, "episodes.csv"))) {
        aggregate_rl(dir);
        return true;
    }
    if (fs::exists(dir / "bp_norms.csv")) {
        aggregate_bp(dir);
        return true;
    }
    bool has_widths = false;
    for (const auto &e : fs::directory_iterator(dir)) {
        has_widths = has_widths || is_width_dir(e.path());
    }
    if (has_widths) {
        aggregate_supervised_root(dir);
        return true;
    }
    return false;
}

} // namespace

std::size_t aggregate_directory(const fs::path &dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("not a directory: " + dir.string());
    }
    std::vector<fs::path> dirs{dir};
    for (const auto &e : fs::recursive_directory_iterator(dir)) {
        if (e.is_directory()) {
            dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin() + 1, dirs.end());
    std::size_t done = 0;
    for (const auto &d : dirs) {
        if (is_width_dir(d)) {
            continue; // handled by the parent
        }
        done += aggregate_one(d) ? 1 : 0;
    }
    return done;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

class Progress {
  public:
    explicit Progress(std::ostream *out) : out_(out) {}

    void line(const std::string &s) {
        if (out_ == nullptr) {
            return;
        }
        std::lock_guard lock(mutex_);
        *out_ << s << '\n' << std::flush;
    }

  private:
    std::ostream *out_;
    std::mutex mutex_;
};

std::size_t workers_for(const RunSection &r, std::size_t jobs) {
    return r.parallelism == 0 ? jobs : r.parallelism;
}

void write_meta(const fs::path &p, std::size_t agent, const RunLog &log) {
    write_json(p, {{"agent", agent},
                   {"episodes", log.returns.size()},
                   {"updates", log.updates.size()},
                   {"total_steps", log.total_steps},
                   {"solved_episode", log.solved_episode ? json(*log.solved_episode) : json(nullptr)}});
}

void run_rl(const Experiment &ex, const fs::path &dir, Progress &progress) {
    std::vector<RunLog> logs(ex.run.agents);
    parallel_for(ex.run.agents, workers_for(ex.run, ex.run.agents), [&](std::size_t k) {
        logs[k] = run_training(ex.train, k);
        progress.line(fmt::format("[{}] agent {} done: {} steps, {}", ex.name, k,
                                  logs[k].total_steps,
                                  logs[k].solved_episode
                                      ? fmt::format("solved at episode {}", *logs[k].solved_episode)
                                      : std::string("not solved")));
    });
    for (std::size_t k = 0; k < logs.size(); ++k) {
        write_episodes_csv(agent_file(dir, k, "episodes.csv"), logs[k]);
        write_updates_csv(agent_file(dir, k, "updates.csv"), logs[k]);
        write_meta(agent_file(dir, k, "meta.json"), k, logs[k]);
    }
    aggregate_rl(dir);
}

void run_bp(const Experiment &ex, const fs::path &dir, Progress &progress) {
    BpScanOptions opts;
    opts.samples = ex.bp.samples;
    opts.batch_size = ex.train.batch_size;
    opts.gamma = ex.train.gamma;
    opts.seed = ex.run.seed;
    opts.parallelism = ex.run.parallelism;
    auto out = open_out(dir / "bp_norms.csv");
    out << "qubits,sample,norm\n";
    for (const auto n : ex.bp.qubits) {
        const std::vector<std::size_t> one{n};
        const auto pts = bp_scan(
            [&](std::size_t q) {
                ModelConfig m = ex.train.model;
                m.qubits = q;
                return build_model(m, EnvId::CartPole, 4);
            },
            one, opts);
        for (std::size_t s = 0; s < pts.front().norms.size(); ++s) {
            out << fmt::format("{},{},{}\n", n, s, pts.front().norms[s]);
        }
        progress.line(fmt::format("[{}] n={} variance {}", ex.name, n, pts.front().variance));
    }
    out.close();
    aggregate_bp(dir);
}

void run_supervised(const Experiment &ex, const fs::path &dir, Progress &progress) {
    for (const auto n : ex.supervised.qubits) {
        const Dataset data = generate_dataset(n, ex.supervised.samples, ex.run.seed,
                                              ex.supervised.train_fraction);
        SupervisedConfig sc;
        sc.model = ex.train.model;
        sc.model.qubits = n;
        sc.lr = ex.train.lr;
        sc.epochs = ex.supervised.epochs;
        sc.batch_size = ex.train.batch_size;
        sc.seed = ex.run.seed;
        sc.keep_gradients = ex.run.keep_gradients;
        std::vector<SupervisedResult> results(ex.run.agents);
        parallel_for(ex.run.agents, workers_for(ex.run, ex.run.agents), [&](std::size_t k) {
            results[k] = train_supervised(sc, data, k);
            progress.line(fmt::format("[{}] n={} run {} validation accuracy {}", ex.name, n, k,
                                      results[k].validation_accuracy.back()));
        });
        const fs::path wdir = dir / fmt::format("n{}", n);
        fs::create_directories(wdir);
        for (std::size_t k = 0; k < results.size(); ++k) {
            auto out = open_out(agent_file(wdir, k, "epochs.csv"));
            out << "epoch,train_accuracy,validation_accuracy,loss\n";
            const auto &r = results[k];
            for (std::size_t e = 0; e < r.train_accuracy.size(); ++e) {
                out << fmt::format("{},{},{},{}\n", e, r.train_accuracy[e],
                                   r.validation_accuracy[e], r.epoch_loss[e]);
            }
            out.close();
            write_updates_csv(agent_file(wdir, k, "updates.csv"), r.log);
        }
    }
    aggregate_supervised_root(dir);
}

fs::path experiment_dir(const ExperimentConfig &cfg, const Experiment &ex) {
    return cfg.has_variants ? fs::path(ex.run.output_dir) / ex.name : fs::path(ex.run.output_dir);
}

} // namespace

void run_config(const ExperimentConfig &cfg, const std::optional<fs::path> &root, std::ostream *log) {
    Progress progress(log);
    if (cfg.has_variants) {
        const fs::path top = resolve_output(cfg.output_dir.string(), root);
        fs::create_directories(top);
        write_json(top / "effective_config.json", cfg.effective);
    }
    for (const auto &ex : cfg.experiments) {
        const fs::path rel = experiment_dir(cfg, ex);
        const fs::path dir = resolve_output(rel.string(), root);
        fs::create_directories(dir);
        json echo = ex.to_json();
        echo["run"]["output_dir"] = rel.generic_string();
        write_json(dir / "effective_config.json", echo);
        progress.line(fmt::format("[{}] {} -> {}", ex.name, to_string(ex.kind), dir.string()));
        switch (ex.kind) {
        case ExperimentKind::RlTrain:
            run_rl(ex, dir, progress);
            break;
        case ExperimentKind::BpScan:
            run_bp(ex, dir, progress);
            break;
        case ExperimentKind::Supervised:
            run_supervised(ex, dir, progress);
            break;
        }
    }
}

} // namespace qdqn
