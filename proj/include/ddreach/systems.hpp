#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ddreach/ode_sim.hpp"
#include "ddreach/unsafe.hpp"

// Built-in benchmark systems.

namespace ddreach::systems {

// ---------------------------------------------------------------------------
// Duffing oscillator
// ---------------------------------------------------------------------------

struct DuffingParams {
  double alpha = 0.05;
  double gamma = 0.4;
  double omega = 1.3;
};

inline void duffing_rhs(const DuffingParams& p, std::span<const double> s, double t, std::span<double> ds) {
  const double x = s[0];
  const double y = s[1];
  ds[0] = y;
  ds[1] = -p.alpha * y + x - x * x * x + p.gamma * std::cos(p.omega * t);
}

[[nodiscard]] inline SystemSpec duffing_spec(const DuffingParams& params = {},
                                             std::vector<Interval> intervals = {{0.95, 1.05}, {-0.05, 0.05}},
                                             TimeGrid grid = {0.0, 100.0, 1001}) {
  return SystemSpec::from_dynamics(
      2,
      [params](std::span<const double> x, double t, std::span<const double>, std::span<double> dx) {
        duffing_rhs(params, x, t, dx);
      },
      std::move(intervals), grid);
}

// ---------------------------------------------------------------------------
// Laub-Loomis
// ---------------------------------------------------------------------------

struct LaubLoomisParams {
  double width = 0.1;  // half-width W of each initial box
  std::array<double, 7> centers{1.2, 1.05, 1.5, 2.4, 1.0, 0.1, 0.45};
};

inline void laub_loomis_rhs(std::span<const double> x, std::span<double> dx) {
  dx[0] = 1.4 * x[2] - 0.9 * x[0];
  dx[1] = 2.5 * x[4] - 1.5 * x[1];
  dx[2] = 0.6 * x[6] - 0.8 * x[1] * x[2];
  dx[3] = 2.0 - 1.3 * x[2] * x[3];
  dx[4] = 0.7 * x[0] - x[3] * x[4];
  dx[5] = 0.3 * x[0] - 3.1 * x[5];
  dx[6] = 1.8 * x[5] - 1.5 * x[1] * x[6];
}

[[nodiscard]] inline SystemSpec laub_loomis_spec(const LaubLoomisParams& params = {},
                                                 TimeGrid grid = {0.0, 20.0, 2001}) {
  if (!(params.width > 0.0)) throw std::invalid_argument("Laub-Loomis box half-width must be positive");
  std::vector<Interval> init;
  for (double c : params.centers) init.push_back({c - params.width, c + params.width});
  return SystemSpec::from_dynamics(
      7,
      [](std::span<const double> x, double, std::span<const double>, std::span<double> dx) {
        laub_loomis_rhs(x, dx);
      },
      std::move(init), grid);
}

/// x4 >= 5 in full-state coordinates.
[[nodiscard]] inline UnsafePredicate laub_loomis_unsafe() {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(7);
  c(3) = 1.0;
  return UnsafePredicate::halfspace(c, 5.0);
}

// ---------------------------------------------------------------------------
// Space rendezvous (planar, switched linear feedback)
// ---------------------------------------------------------------------------

using Gain = std::array<std::array<double, 4>, 2>;

/// Which reading of the rendezvous-attempt gain K2 to use. The published
/// matrix prints entry (0, 2) as -96149898; `Corrected` uses -9614.9898,
/// the magnitude consistent with entry (1, 3).
enum class K2Reading { Corrected, Printed };

struct RendezvousParams {
  double mu = 3.986e14 * 60.0 * 60.0;  // m^3 / min^2
  double r = 42164e3;                  // m
  double mc = 500.0;                   // kg
  Gain k1{{{-28.8287, 0.1005, -1449.9754, 0.0046}, {-0.087, -33.2562, 0.00462, -1451.5013}}};
  Gain k2 = k2_for(K2Reading::Corrected);
  double attempt_x = -100.0;   // m; rendezvous attempt for x >= attempt_x
  double abort_time = 120.0;   // min; aborting for t >= abort_time

  [[nodiscard]] double n() const { return std::sqrt(mu / (r * r * r)); }

  [[nodiscard]] static Gain k2_for(K2Reading reading) {
    const double k2_02 = reading == K2Reading::Corrected ? -9614.9898 : -96149898.0;
    return {{{-288.0288, 0.1312, k2_02, 0.0}, {-0.1312, -288.0, 0.0, -9614.9883}}};
  }
};

enum class RendezvousMode { Approaching, Attempt, Aborting };

/// Aborting takes precedence over the position-based modes. Positions below
/// the approach window are treated as approaching.
[[nodiscard]] inline RendezvousMode rendezvous_mode(const RendezvousParams& p, double x, double t) {
  if (t >= p.abort_time) return RendezvousMode::Aborting;
  if (x >= p.attempt_x) return RendezvousMode::Attempt;
  return RendezvousMode::Approaching;
}

[[nodiscard]] inline std::array<double, 2> rendezvous_control(const RendezvousParams& p, std::span<const double> s,
                                                              double t) {
  const auto mode = rendezvous_mode(p, s[0], t);
  if (mode == RendezvousMode::Aborting) return {0.0, 0.0};
  const Gain& k = mode == RendezvousMode::Attempt ? p.k2 : p.k1;
  std::array<double, 2> u{};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 4; ++j) u[i] += k[i][j] * s[j];
  }
  return u;
}

/// Dynamics with a given control force (controls applied as u / mc).
inline void rendezvous_open_loop_rhs(const RendezvousParams& p, std::span<const double> s, std::array<double, 2> u,
                                     std::span<double> ds) {
  const double x = s[0], y = s[1], vx = s[2], vy = s[3];
  const double n = p.n();
  const double rc = std::sqrt((p.r + x) * (p.r + x) + y * y);
  const double rc3 = rc * rc * rc;
  ds[0] = vx;
  ds[1] = vy;
  ds[2] = n * n * x + 2.0 * n * vy + p.mu / (p.r * p.r) - p.mu / rc3 * (p.r + x) + u[0] / p.mc;
  ds[3] = n * n * y - 2.0 * n * vx - p.mu / rc3 * y + u[1] / p.mc;
}

inline void rendezvous_rhs(const RendezvousParams& p, std::span<const double> s, double t, std::span<double> ds) {
  rendezvous_open_loop_rhs(p, s, rendezvous_control(p, s, t), ds);
}

[[nodiscard]] inline SystemSpec rendezvous_spec(const RendezvousParams& params = {},
                                                TimeGrid grid = {0.0, 200.0, 20001}) {
  return SystemSpec::from_dynamics(
      4,
      [params](std::span<const double> x, double t, std::span<const double>, std::span<double> dx) {
        rendezvous_rhs(params, x, t, dx);
      },
      {{-925.0, -875.0}, {-425.0, -375.0}, {0.0, 0.0}, {0.0, 0.0}}, grid);
}

// ---------------------------------------------------------------------------
// 12-state quadrotor with PD height/roll/pitch control
// ---------------------------------------------------------------------------

struct QuadrotorParams {
  double g = 9.81;
  double radius = 0.1;      // R, radius of the center mass
  double arm = 0.5;         // l, motor distance from the center
  double rotor_mass = 0.1;
  double body_mass = 1.0;
  double height_setpoint = 1.0;  // u1
  double roll_setpoint = 0.0;    // u2
  double pitch_setpoint = 0.0;   // u3

  [[nodiscard]] double mass() const { return body_mass + 4.0 * rotor_mass; }
  [[nodiscard]] double jx() const { return 0.4 * body_mass * radius * radius + 2.0 * arm * arm * rotor_mass; }
  [[nodiscard]] double jy() const { return jx(); }
  [[nodiscard]] double jz() const { return 0.4 * body_mass * radius * radius + 4.0 * arm * arm * rotor_mass; }
};

struct QuadrotorInputs {
  double thrust = 0.0;  // F
  double tau_phi = 0.0;
  double tau_theta = 0.0;
  double tau_psi = 0.0;
};

[[nodiscard]] inline QuadrotorInputs quadrotor_control(const QuadrotorParams& p, std::span<const double> x) {
  QuadrotorInputs in;
  in.thrust = p.mass() * p.g - 10.0 * (x[2] - p.height_setpoint) + 3.0 * x[5];
  in.tau_phi = -(x[6] - p.roll_setpoint) - x[9];
  in.tau_theta = -(x[7] - p.pitch_setpoint) - x[10];
  in.tau_psi = 0.0;
  return in;
}

/// States: north, east, altitude, body velocities u v w, roll, pitch, yaw,
/// body rates p q r.
inline void quadrotor_open_loop_rhs(const QuadrotorParams& p, std::span<const double> x, const QuadrotorInputs& in,
                                    std::span<double> dx) {
  const double c7 = std::cos(x[6]), s7 = std::sin(x[6]);
  const double c8 = std::cos(x[7]), s8 = std::sin(x[7]), t8 = std::tan(x[7]);
  const double c9 = std::cos(x[8]), s9 = std::sin(x[8]);
  const double jx = p.jx(), jy = p.jy(), jz = p.jz();

  dx[0] = c8 * c9 * x[3] + (s7 * s8 * c9 - c7 * s9) * x[4] + (c7 * s8 * c9 + s7 * s9) * x[5];
  dx[1] = c8 * s9 * x[3] + (s7 * s8 * s9 + c7 * c9) * x[4] + (c7 * s8 * s9 - s7 * c9) * x[5];
  dx[2] = s8 * x[3] - s7 * c8 * x[4] - c7 * c8 * x[5];
  dx[3] = x[11] * x[4] - x[10] * x[5] - p.g * s8;
  dx[4] = x[9] * x[5] - x[11] * x[3] + p.g * c8 * s7;
  dx[5] = x[10] * x[3] - x[9] * x[4] + p.g * c8 * c7 - in.thrust / p.mass();
  dx[6] = x[9] + s7 * t8 * x[10] + c7 * t8 * x[11];
  dx[7] = c7 * x[10] - s7 * x[11];
  dx[8] = s7 / c8 * x[10] + c7 / c8 * x[11];
  dx[9] = (jy - jz) / jx * x[10] * x[11] + in.tau_phi / jx;
  dx[10] = (jz - jx) / jy * x[9] * x[11] + in.tau_theta / jy;
  dx[11] = (jx - jy) / jz * x[9] * x[10] + in.tau_psi / jz;
}

inline void quadrotor_rhs(const QuadrotorParams& p, std::span<const double> x, std::span<double> dx) {
  quadrotor_open_loop_rhs(p, x, quadrotor_control(p, x), dx);
}

[[nodiscard]] inline std::vector<Interval> quadrotor_default_intervals() {
  std::vector<Interval> init(12, Interval{0.0, 0.0});
  for (std::size_t i = 0; i < 6; ++i) init[i] = {-0.4, 0.4};
  return init;
}

[[nodiscard]] inline SystemSpec quadrotor_spec(const QuadrotorParams& params = {},
                                               std::vector<Interval> intervals = quadrotor_default_intervals(),
                                               TimeGrid grid = {0.0, 5.0, 501}) {
  return SystemSpec::from_dynamics(
      12,
      [params](std::span<const double> x, double, std::span<const double>, std::span<double> dx) {
        quadrotor_rhs(params, x, dx);
      },
      std::move(intervals), grid);
}

}  // namespace ddreach::systems
