#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace qdqn {

enum class EnvId { CartPole, Acrobot };

std::string to_string(EnvId id);
EnvId env_from_string(const std::string &name);

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
    /// True when the episode ended only because of the step limit.
    bool truncated = false;
};

class Environment {
  public:
    virtual ~Environment() = default;

    virtual EnvId id() const = 0;
    virtual std::size_t num_actions() const = 0;
    virtual std::size_t observation_dim() const = 0;
    virtual std::size_t max_steps() const = 0;

    virtual std::vector<double> reset(std::mt19937_64 &rng) = 0;
    /// Throws std::logic_error once the episode has ended.
    virtual StepResult step(std::size_t action) = 0;
};

struct CartPoleParams {
    double gravity = 9.8;
    double mass_cart = 1.0;
    double mass_pole = 0.1;
    double half_length = 0.5;
    double force_mag = 10.0;
    double tau = 0.02;
    double x_threshold = 2.4;
    double theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
    std::size_t max_steps = 200;
};

/// Cart-pole balancing with explicit Euler integration. Action 0 pushes left,
/// 1 pushes right. State is [x, x_dot, theta, theta_dot].
class CartPole final : public Environment {
  public:
    explicit CartPole(CartPoleParams p = {}) : p_(p) {}

    EnvId id() const override { return EnvId::CartPole; }
    std::size_t num_actions() const override { return 2; }
    std::size_t observation_dim() const override { return 4; }
    std::size_t max_steps() const override { return p_.max_steps; }

    std::vector<double> reset(std::mt19937_64 &rng) override;
    StepResult step(std::size_t action) override;

    const std::array<double, 4> &state() const noexcept { return s_; }
    void set_state(const std::array<double, 4> &s, std::size_t steps = 0);
    std::size_t steps() const noexcept { return steps_; }
    const CartPoleParams &params() const noexcept { return p_; }

  private:
    CartPoleParams p_;
    std::array<double, 4> s_{};
    std::size_t steps_ = 0;
    bool done_ = true;
};

struct AcrobotParams {
    double link_length_1 = 1.0;
    double link_mass_1 = 1.0;
    double link_mass_2 = 1.0;
    double link_com_1 = 0.5;
    double link_com_2 = 0.5;
    double link_moi = 1.0;
    double gravity = 9.8;
    double dt = 0.2;
    double max_vel_1 = 4.0 * 3.14159265358979323846;
    double max_vel_2 = 9.0 * 3.14159265358979323846;
    std::size_t max_steps = 500;
};

/// Two-link underactuated pendulum, torque in {-1, 0, +1} on the middle
/// joint (actions 0, 1, 2). The observation is the 4-dimensional reduced
/// state [theta1, theta2, omega1, omega2] with both angles in [-pi, pi].
class Acrobot final : public Environment {
  public:
    explicit Acrobot(AcrobotParams p = {}) : p_(p) {}

    EnvId id() const override { return EnvId::Acrobot; }
    std::size_t num_actions() const override { return 3; }
    std::size_t observation_dim() const override { return 4; }
    std::size_t max_steps() const override { return p_.max_steps; }

    std::vector<double> reset(std::mt19937_64 &rng) override;
    StepResult step(std::size_t action) override;

    const std::array<double, 4> &state() const noexcept { return s_; }
    void set_state(const std::array<double, 4> &s, std::size_t steps = 0);
    std::size_t steps() const noexcept { return steps_; }
    const AcrobotParams &params() const noexcept { return p_; }

    bool goal_reached() const;
    /// Time derivative of [theta1, theta2, omega1, omega2] under `torque`.
    std::array<double, 4> derivatives(const std::array<double, 4> &s, double torque) const;

  private:
    AcrobotParams p_;
    std::array<double, 4> s_{};
    std::size_t steps_ = 0;
    bool done_ = true;
};

std::unique_ptr<Environment> make_environment(EnvId id);

} // namespace qdqn
