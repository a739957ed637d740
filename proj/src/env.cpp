#include "qdqn/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdqn {

std::string to_string(EnvId id) {
    switch (id) {
    case EnvId::CartPole:
        return "cartpole";
    case EnvId::Acrobot:
        return "acrobot";
    }
    return "unknown";
}

EnvId env_from_string(const std::string &name) {
    if (name == "cartpole" || name == "CartPole-v0") {
        return EnvId::CartPole;
    }
    if (name == "acrobot" || name == "Acrobot-v1") {
        return EnvId::Acrobot;
    }
    throw std::invalid_argument("unknown environment '" + name + "'");
}

// ---------------------------------------------------------------------------
// CartPole

std::vector<double> CartPole::reset(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (auto &v : s_) {
        v = u(rng);
    }
    steps_ = 0;
    done_ = false;
    return {s_.begin(), s_.end()};
}

void CartPole::set_state(const std::array<double, 4> &s, std::size_t steps) {
    s_ = s;
    steps_ = steps;
    done_ = false;
}

StepResult CartPole::step(std::size_t action) {
    if (done_) {
        throw std::logic_error("CartPole: step called on a terminated episode");
    }
    if (action > 1) {
        throw std::out_of_range("CartPole: action must be 0 or 1");
    }
    auto [x, x_dot, theta, theta_dot] = s_;
    const double total_mass = p_.mass_cart + p_.mass_pole;
    const double polemass_length = p_.mass_pole * p_.half_length;
    const double force = action == 1 ? p_.force_mag : -p_.force_mag;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);

    const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc =
        (p_.gravity * sin_t - cos_t * temp) /
        (p_.half_length * (4.0 / 3.0 - p_.mass_pole * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

    x += p_.tau * x_dot;
    x_dot += p_.tau * x_acc;
    theta += p_.tau * theta_dot;
    theta_dot += p_.tau * theta_acc;
    s_ = {x, x_dot, theta, theta_dot};
    ++steps_;

    StepResult r;
    r.observation.assign(s_.begin(), s_.end());
    r.reward = 1.0;
    const bool failed = x < -p_.x_threshold || x > p_.x_threshold ||
                        theta < -p_.theta_threshold || theta > p_.theta_threshold;
    r.truncated = !failed && steps_ >= p_.max_steps;
    r.done = failed || r.truncated;
    done_ = r.done;
    return r;
}

// ---------------------------------------------------------------------------
// Acrobot

namespace {

double wrap(double x, double lo, double hi) {
    const double diff = hi - lo;
    while (x > hi) {
        x -= diff;
    }
    while (x < lo) {
        x += diff;
    }
    return x;
}

} // namespace

std::vector<double> Acrobot::reset(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (auto &v : s_) {
        v = u(rng);
    }
    steps_ = 0;
    done_ = false;
    return {s_.begin(), s_.end()};
}

void Acrobot::set_state(const std::array<double, 4> &s, std::size_t steps) {
    s_ = s;
    steps_ = steps;
    done_ = false;
}

bool Acrobot::goal_reached() const {
    return -std::cos(s_[0]) - std::cos(s_[1] + s_[0]) > 1.0;
}

std::array<double, 4> Acrobot::derivatives(const std::array<double, 4> &s, double torque) const {
    const double m1 = p_.link_mass_1;
    const double m2 = p_.link_mass_2;
    const double l1 = p_.link_length_1;
    const double lc1 = p_.link_com_1;
    const double lc2 = p_.link_com_2;
    const double i1 = p_.link_moi;
    const double i2 = p_.link_moi;
    const double g = p_.gravity;
    const auto [theta1, theta2, dtheta1, dtheta2] = s;
    constexpr double half_pi = std::numbers::pi / 2.0;

    const double d1 =
        m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
    const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - half_pi);
    const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                        2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - half_pi) + phi2;
    const double ddtheta2 =
        (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
        (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

StepResult Acrobot::step(std::size_t action) {
    if (done_) {
        throw std::logic_error("Acrobot: step called on a terminated episode");
    }
    if (action > 2) {
        throw std::out_of_range("Acrobot: action must be 0, 1 or 2");
    }
    const double torque = static_cast<double>(action) - 1.0;
    const double dt = p_.dt;

    // One classical RK4 step over [0, dt] with the torque held constant.
    auto add = [](const std::array<double, 4> &a, const std::array<double, 4> &b, double h) {
        return std::array<double, 4>{a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2],
                                     a[3] + h * b[3]};
    };
    const auto k1 = derivatives(s_, torque);
    const auto k2 = derivatives(add(s_, k1, dt / 2.0), torque);
    const auto k3 = derivatives(add(s_, k2, dt / 2.0), torque);
    const auto k4 = derivatives(add(s_, k3, dt), torque);
    std::array<double, 4> ns{};
    for (std::size_t i = 0; i < 4; ++i) {
        ns[i] = s_[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    ns[0] = wrap(ns[0], -std::numbers::pi, std::numbers::pi);
    ns[1] = wrap(ns[1], -std::numbers::pi, std::numbers::pi);
    ns[2] = std::clamp(ns[2], -p_.max_vel_1, p_.max_vel_1);
    ns[3] = std::clamp(ns[3], -p_.max_vel_2, p_.max_vel_2);
    s_ = ns;
    ++steps_;

    StepResult r;
    r.observation.assign(s_.begin(), s_.end());
    const bool goal = goal_reached();
    r.reward = goal ? 0.0 : -1.0;
    r.truncated = !goal && steps_ >= p_.max_steps;
    r.done = goal || r.truncated;
    done_ = r.done;
    return r;
}

std::unique_ptr<Environment> make_environment(EnvId id) {
    switch (id) {
    case EnvId::CartPole:
        return std::make_unique<CartPole>();
    case EnvId::Acrobot:
        return std::make_unique<Acrobot>();
    }
    throw std::invalid_argument("make_environment: unknown id");
}

} // namespace qdqn
