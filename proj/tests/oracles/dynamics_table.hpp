#pragma once

// Hand-transcribed right-hand sides for the benchmark systems, written
// separately from include/ddreach/systems.hpp (named physical variables,
// no shared helpers) so that a transcription slip in either copy shows up
// as a mismatch.

#include <array>
#include <cmath>

namespace ddreach::oracle {

inline std::array<double, 2> duffing(double x, double y, double t) {
  const double alpha = 0.05, gamma = 0.4, omega = 1.3;
  return {y, -alpha * y + x - std::pow(x, 3) + gamma * std::cos(omega * t)};
}

inline std::array<double, 7> laub_loomis(const std::array<double, 7>& s) {
  const auto [x1, x2, x3, x4, x5, x6, x7] = s;
  return {
      1.4 * x3 - 0.9 * x1,
      2.5 * x5 - 1.5 * x2,
      0.6 * x7 - 0.8 * x2 * x3,
      2 - 1.3 * x3 * x4,
      0.7 * x1 - x4 * x5,
      0.3 * x1 - 3.1 * x6,
      1.8 * x6 - 1.5 * x2 * x7,
  };
}

/// `k2_vx` is the (0, 2) entry of the rendezvous-attempt gain.
inline std::array<double, 4> rendezvous(const std::array<double, 4>& s, double t, double k2_vx) {
  const auto [x, y, vx, vy] = s;
  const double mu = 3.986e14 * 3600.0;
  const double r = 42164000.0;
  const double mc = 500.0;
  const double n = std::sqrt(mu / std::pow(r, 3));
  const double rc = std::sqrt(std::pow(r + x, 2) + std::pow(y, 2));

  double ux = 0, uy = 0;
  if (t < 120.0) {
    if (x >= -100.0) {
      ux = -288.0288 * x + 0.1312 * y + k2_vx * vx + 0 * vy;
      uy = -0.1312 * x - 288 * y + 0 * vx - 9614.9883 * vy;
    } else {
      ux = -28.8287 * x + 0.1005 * y - 1449.9754 * vx + 0.0046 * vy;
      uy = -0.087 * x - 33.2562 * y + 0.00462 * vx - 1451.5013 * vy;
    }
  }
  return {
      vx,
      vy,
      n * n * x + 2 * n * vy + mu / std::pow(r, 2) - mu / std::pow(rc, 3) * (r + x) + ux / mc,
      n * n * y - 2 * n * vx - mu / std::pow(rc, 3) * y + uy / mc,
  };
}

inline std::array<double, 12> quadrotor(const std::array<double, 12>& s) {
  const double g = 9.81, R = 0.1, l = 0.5, Mrotor = 0.1, M = 1.0;
  const double m = M + 4 * Mrotor;
  const double Jx = 2.0 / 5.0 * M * R * R + 2 * l * l * Mrotor;
  const double Jy = Jx;
  const double Jz = 2.0 / 5.0 * M * R * R + 4 * l * l * Mrotor;
  const double u1 = 1.0, u2 = 0.0, u3 = 0.0;

  const double pn = s[0], pe = s[1], h = s[2];
  const double u = s[3], v = s[4], w = s[5];
  const double phi = s[6], theta = s[7], psi = s[8];
  const double p = s[9], q = s[10], r = s[11];
  (void)pn;
  (void)pe;

  const double F = m * g - 10 * (h - u1) + 3 * w;
  const double tau_phi = -(phi - u2) - p;
  const double tau_theta = -(theta - u3) - q;
  const double tau_psi = 0;

  using std::cos;
  using std::sin;
  using std::tan;
  return {
      cos(theta) * cos(psi) * u + (sin(phi) * sin(theta) * cos(psi) - cos(phi) * sin(psi)) * v +
          (cos(phi) * sin(theta) * cos(psi) + sin(phi) * sin(psi)) * w,
      cos(theta) * sin(psi) * u + (sin(phi) * sin(theta) * sin(psi) + cos(phi) * cos(psi)) * v +
          (cos(phi) * sin(theta) * sin(psi) - sin(phi) * cos(psi)) * w,
      sin(theta) * u - sin(phi) * cos(theta) * v - cos(phi) * cos(theta) * w,
      r * v - q * w - g * sin(theta),
      p * w - r * u + g * cos(theta) * sin(phi),
      q * u - p * v + g * cos(theta) * cos(phi) - F / m,
      p + sin(phi) * tan(theta) * q + cos(phi) * tan(theta) * r,
      cos(phi) * q - sin(phi) * r,
      sin(phi) / cos(theta) * q + cos(phi) / cos(theta) * r,
      (Jy - Jz) / Jx * q * r + tau_phi / Jx,
      (Jz - Jx) / Jy * p * r + tau_theta / Jy,
      (Jx - Jy) / Jz * p * q + tau_psi / Jz,
  };
}

}  // namespace ddreach::oracle
