#pragma once

#include <numbers>

namespace pkgloss {

inline constexpr double pi = std::numbers::pi;

/// CODATA 2018 values, SI units.
struct PhysicalConstants {
  static constexpr double mu0 = 1.25663706212e-6;        // H/m
  static constexpr double epsilon0 = 8.8541878128e-12;   // F/m
  static constexpr double hbar = 1.054571817e-34;        // J*s
  static constexpr double speed_of_light = 299792458.0;  // m/s
};

inline constexpr double angular_frequency(double f_hz) { return 2.0 * pi * f_hz; }

}  // namespace pkgloss
