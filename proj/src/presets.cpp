#include <stdexcept>
#include <string>
#include <vector>

#include "qdqn/runner.hpp"

namespace qdqn {

using nlohmann::json;

namespace {

json even_range(std::size_t lo, std::size_t hi) {
    json a = json::array();
    for (std::size_t n = lo; n <= hi; n += 2) {
        a.push_back(n);
    }
    return a;
}

json skolik_ablation(const std::string &env) {
    json variants = json::array();
    for (const bool reupload : {true, false}) {
        for (const bool in : {true, false}) {
            for (const bool out : {true, false}) {
                std::string name = reupload ? "reupload" : "baseline";
                name += in ? "-in" : "";
                name += out ? "-out" : "";
                variants.push_back(
                    {{"name", name},
                     {"set",
                      {{"model",
                        {{"reupload", reupload},
                         {"input_scaling", in ? "trainable" : "fixed"},
                         {"output_scaling", out ? "trainable" : "fixed"}}}}}});
            }
        }
    }
    return {{"name", "skolik-ablation-" + env},
            {"experiment", "rl-train"},
            {"env", env},
            {"model", {{"family", "skolik"}, {"qubits", 4}, {"layers", 5}}},
            {"run", {{"agents", 10}, {"seed", 0}, {"output_dir", "runs/skolik-ablation-" + env}}},
            {"variants", variants}};
}

json target_sweep() {
    json variants = json::array();
    for (const int c : {1, 500, 1000, 2500}) {
        variants.push_back({{"name", "cartpole-C" + std::to_string(c)},
                            {"set", {{"env", "cartpole"}, {"hyperparameters", {{"update_target", c}}}}}});
    }
    for (const int c : {100, 1000, 2500, 5000}) {
        variants.push_back({{"name", "acrobot-C" + std::to_string(c)},
                            {"set", {{"env", "acrobot"}, {"hyperparameters", {{"update_target", c}}}}}});
    }
    return {{"name", "target-C-sweep"},
            {"experiment", "rl-train"},
            {"model", {{"family", "skolik"}, {"qubits", 4}, {"layers", 5}, {"reupload", true}}},
            {"run", {{"agents", 10}, {"seed", 0}, {"output_dir", "runs/target-C-sweep"}}},
            {"variants", variants}};
}

json uqc_entanglement() {
    json variants = json::array();
    for (const std::string env : {"cartpole", "acrobot"}) {
        for (const int n : {1, 2, 4}) {
            for (const std::string enc : {"full", "partial"}) {
                for (const bool ent : {true, false}) {
                    variants.push_back(
                        {{"name", env + "-n" + std::to_string(n) + "-" + enc +
                                      (ent ? "-entangled" : "-product")},
                         {"set",
                          {{"env", env},
                           {"model", {{"qubits", n}, {"encoding", enc}, {"entangle", ent}}}}}});
                }
            }
        }
    }
    return {{"name", "uqc-entanglement"},
            {"experiment", "rl-train"},
            {"model", {{"family", "uqc"}, {"layers", 5}}},
            {"run", {{"agents", 10}, {"seed", 0}, {"output_dir", "runs/uqc-entanglement"}}},
            {"variants", variants}};
}

json uqc_qubit_sweep() {
    json variants = json::array();
    for (const std::string env : {"cartpole", "acrobot"}) {
        for (const auto &n : even_range(2, 12)) {
            variants.push_back({{"name", env + "-n" + std::to_string(n.get<int>())},
                                {"set", {{"env", env}, {"model", {{"qubits", n}}}}}});
        }
    }
    return {{"name", "uqc-qubit-sweep"},
            {"experiment", "rl-train"},
            {"model", {{"family", "uqc"}, {"layers", 5}, {"encoding", "full"}, {"entangle", true}}},
            {"run", {{"agents", 10}, {"seed", 0}, {"output_dir", "runs/uqc-qubit-sweep"}}},
            {"variants", variants}};
}

json bp_scan_preset() {
    return {{"name", "bp-scan"},
            {"experiment", "bp-scan"},
            {"env", "cartpole"},
            {"model",
             {{"family", "uqc"},
              {"layers", 5},
              {"encoding", "full"},
              {"entangle", true},
              {"output_scaling", "fixed"}}},
            {"hyperparameters", {{"batch_size", 16}, {"init", "uniform-2pi"}}},
            {"run", {{"seed", 0}, {"output_dir", "runs/bp-scan"}}},
            {"bp_scan", {{"qubits", even_range(2, 16)}, {"samples", 1000}}},
            {"variants",
             {{{"name", "local"}, {"set", {{"model", {{"observables", "local"}}}}}},
              {{"name", "global"}, {"set", {{"model", {{"observables", "global"}}}}}}}}};
}

json supervised_sweep() {
    return {{"name", "supervised-sweep"},
            {"experiment", "supervised"},
            {"model", {{"layers", 5}, {"reupload", true}, {"encoding", "full"}, {"entangle", true}}},
            {"hyperparameters", {{"batch_size", 32}}},
            {"run", {{"agents", 10}, {"seed", 0}, {"output_dir", "runs/supervised-sweep"}}},
            {"supervised", {{"qubits", even_range(2, 12)}, {"epochs", 50}, {"samples", 500}}},
            {"variants",
             {{{"name", "skolik"}, {"set", {{"model", {{"family", "skolik"}}}}}},
              {{"name", "uqc"}, {"set", {{"model", {{"family", "uqc"}}}}}}}}};
}

} // namespace

const std::vector<Preset> &presets() {
    static const std::vector<Preset> all = {
        {"skolik-ablation-cartpole", "re-uploading and scaling ablation on CartPole",
         skolik_ablation("cartpole")},
        {"skolik-ablation-acrobot", "re-uploading and scaling ablation on Acrobot",
         skolik_ablation("acrobot")},
        {"target-C-sweep", "target network update period sweep on both environments",
         target_sweep()},
        {"uqc-entanglement", "UQC full/partial encoding with and without entanglement",
         uqc_entanglement()},
        {"uqc-qubit-sweep", "UQC training runs for 2 to 12 qubits", uqc_qubit_sweep()},
        {"bp-scan", "first-step gradient-norm variance for 2 to 16 qubits", bp_scan_preset()},
        {"supervised-sweep", "binary classification control for 2 to 12 qubits",
         supervised_sweep()},
    };
    return all;
}

const Preset &find_preset(const std::string &name) {
    for (const auto &p : presets()) {
        if (p.name == name) {
            return p;
        }
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

} // namespace qdqn
