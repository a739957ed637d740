#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qdqn/circuit.hpp"
#include "qdqn/env.hpp"
#include "qdqn/statevec.hpp"

namespace qdqn {

enum class Family { Skolik, UQC, Custom };
enum class ScalingMode { Trainable, Fixed, Absent };
enum class Encoding { Full, Partial };
enum class ParamRole { Rotational, Input, Output };
enum class ObservableKind { Local, Global };

struct ParamGroup {
    std::string name;
    ParamRole role = ParamRole::Rotational;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool trainable = true;
};

/// Flat parameter vector laid out as [rotational | input weights | output weights].
struct ParamSet {
    std::vector<double> values;
    std::size_t n_rotational = 0;
    std::size_t n_input = 0;
    std::size_t n_output = 0;

    std::size_t size() const noexcept { return values.size(); }

    std::span<const double> rotational() const { return {values.data(), n_rotational}; }
    std::span<const double> input_weights() const {
        return {values.data() + n_rotational, n_input};
    }
    std::span<const double> output_weights() const {
        return {values.data() + n_rotational + n_input, n_output};
    }
    std::span<double> rotational() { return {values.data(), n_rotational}; }
    std::span<double> input_weights() { return {values.data() + n_rotational, n_input}; }
    std::span<double> output_weights() {
        return {values.data() + n_rotational + n_input, n_output};
    }

    bool operator==(const ParamSet &) const = default;
};

/// Immutable description of a parameterized Q-function circuit. Use the
/// builders below; the fields are public for inspection.
struct ModelSpec {
    Family family = Family::Custom;
    std::size_t n_qubits = 0;
    std::size_t n_layers = 0;
    std::size_t feature_dim = 0;
    bool reupload = false;
    ScalingMode input_scaling = ScalingMode::Absent;
    ScalingMode output_scaling = ScalingMode::Trainable;
    Encoding encoding = Encoding::Full;
    bool entangle = false;
    std::vector<ZObservable> observables;

    Circuit circuit;
    std::vector<ParamGroup> groups;
    std::size_t n_rotational = 0;
    std::size_t n_input = 0;

    std::size_t num_actions() const noexcept { return observables.size(); }
    std::size_t num_params() const noexcept { return n_rotational + n_input + observables.size(); }
    std::size_t output_offset() const noexcept { return n_rotational + n_input; }

    /// Flat indices of trainable parameters, in layout order. Gradients are
    /// indexed the same way.
    const std::vector<std::size_t> &trainable() const noexcept { return trainable_; }
    std::size_t num_trainable() const noexcept { return trainable_.size(); }
    /// Position of flat parameter `flat` inside a gradient vector, or kNoIndex.
    std::size_t gradient_slot(std::size_t flat) const { return slot_of_[flat]; }
    ParamRole role_of(std::size_t flat) const;

    /// Recomputes trainable indices from `groups`; builders call this.
    void finalize();

  private:
    std::vector<std::size_t> trainable_;
    std::vector<std::size_t> slot_of_;
};

ModelSpec build_skolik(std::size_t n_qubits, std::size_t layers, bool reupload,
                       ScalingMode input_scaling, ScalingMode output_scaling,
                       std::vector<ZObservable> observables);

/// Each layer applies, per qubit, R_Z(2 w.x + 2 alpha) then R_Y(2 phi).
ModelSpec build_uqc(std::size_t n_qubits, std::size_t layers, Encoding encoding, bool entangle,
                    std::size_t feature_dim, std::vector<ZObservable> observables,
                    ScalingMode output_scaling = ScalingMode::Trainable);

/// Wraps a hand-built circuit. Every parameter the circuit references is a
/// trainable rotational parameter; output weights follow `output_scaling`.
ModelSpec build_custom(Circuit circuit, std::size_t feature_dim,
                       std::vector<ZObservable> observables,
                       ScalingMode output_scaling = ScalingMode::Fixed);

/// Builder options for the two experiment families.
struct ModelConfig {
    Family family = Family::Skolik;
    std::size_t qubits = 4;
    std::size_t layers = 5;
    bool reupload = true;
    ScalingMode input_scaling = ScalingMode::Trainable;
    ScalingMode output_scaling = ScalingMode::Trainable;
    Encoding encoding = Encoding::Full; // UQC only
    bool entangle = true;               // UQC only
    ObservableKind observable_kind = ObservableKind::Local;
    /// Overrides the default observables when non-empty (one qubit list per action).
    std::vector<std::vector<std::size_t>> observables;

    bool operator==(const ModelConfig &) const = default;
};

/// `task` selects the default observables (its action count); feature_dim is
/// the length of the preprocessed input.
ModelSpec build_model(const ModelConfig &cfg, EnvId task, std::size_t feature_dim = 4);

/// Per-action observables used by the experiments at width n.
std::vector<ZObservable> default_observables(EnvId env, std::size_t n_qubits,
                                             ObservableKind kind = ObservableKind::Local);

enum class InitScheme {
    Default,  ///< U[0,pi] rotations, unit input/output weights (Skolik) or N(0, 0.01) w, zero bias (UQC)
    Uniform2Pi ///< every circuit parameter U[0, 2pi]; output weights 1
};

ParamSet init_params(const ModelSpec &model, std::mt19937_64 &rng,
                     InitScheme scheme = InitScheme::Default);

/// A ParamSet of the right shape with every value equal to `fill`.
ParamSet make_params(const ModelSpec &model, double fill = 0.0);

void check_params(const ModelSpec &model, const ParamSet &params);
void check_features(const ModelSpec &model, std::span<const double> features);

/// Q_a = w_a <O_a> on the circuit prepared from `features`.
std::vector<double> q_values(const ModelSpec &model, const ParamSet &params,
                             std::span<const double> features);

/// Identity on bounded components, arctan on velocities.
std::vector<double> preprocess(std::span<const double> raw_state, EnvId env);

std::string to_string(Family f);
std::string to_string(ScalingMode m);
std::string to_string(Encoding e);
std::string to_string(ObservableKind k);
Family family_from_string(const std::string &s);
ScalingMode scaling_from_string(const std::string &s);
Encoding encoding_from_string(const std::string &s);
ObservableKind observable_kind_from_string(const std::string &s);

} // namespace qdqn
