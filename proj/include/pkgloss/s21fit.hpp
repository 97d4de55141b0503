#pragma once

// Notch-type resonator S21 with the diameter-correction model:
//
//   S21(f) = a e^{i alpha} e^{-2 pi i f tau} [1 - (Ql/|Qc|) e^{i phi} / (1 + 2 i Ql (f/f0 - 1))]
//   1/Qi   = 1/Ql - cos(phi)/|Qc|
//
// Fitting is a weighted complex least-squares problem solved by
// Levenberg-Marquardt with an analytic Jacobian. Both quadratures are fitted
// together, each weighted by its own standard error of the mean.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pkgloss/constants.hpp"
#include "pkgloss/errors.hpp"

namespace pkgloss::fit {

using cplx = std::complex<double>;

struct ResonanceParams {
  double f0_hz = 0.0;
  double q_loaded = 0.0;
  double q_c_mag = 0.0;
  double phi = 0.0;    // rad
  double amp = 1.0;
  double alpha = 0.0;  // rad
  double tau_s = 0.0;  // cable delay

  void validate() const {
    pkgloss::detail::require_positive(f0_hz, "f0");
    pkgloss::detail::require_positive(q_loaded, "loaded Q");
    pkgloss::detail::require_positive(q_c_mag, "|Qc|");
    pkgloss::detail::require_positive(amp, "amplitude");
    if (!(phi > -pi && phi <= pi)) throw DomainError("phi must lie in (-pi, pi]");
    if (!std::isfinite(alpha) || !std::isfinite(tau_s)) throw DomainError("alpha and tau must be finite");
  }
};

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * pi);
  return a <= -pi ? a + 2.0 * pi : a;
}

inline cplx model_s21(const ResonanceParams& p, double f_hz) {
  const cplx i(0.0, 1.0);
  const cplx baseline = p.amp * std::exp(i * (p.alpha - 2.0 * pi * f_hz * p.tau_s));
  const cplx dip = (p.q_loaded / p.q_c_mag) * std::exp(i * p.phi) / (1.0 + 2.0 * i * p.q_loaded * (f_hz / p.f0_hz - 1.0));
  return baseline * (1.0 - dip);
}

/// 1/Qi = 1/Ql - cos(phi)/|Qc|. Throws if the result is not positive.
inline double qi_from_params(double q_loaded, double q_c_mag, double phi) {
  pkgloss::detail::require_positive(q_loaded, "loaded Q");
  if (!(q_c_mag > 0.0)) throw DomainError("|Qc| must be positive");
  const double inv = 1.0 / q_loaded - (std::isinf(q_c_mag) ? 0.0 : std::cos(phi) / q_c_mag);
  if (!(inv > 0.0)) throw DomainError("non-physical internal Q (1/Qi <= 0)");
  return 1.0 / inv;
}

/// One frequency sweep.
struct RawScan {
  std::vector<double> frequencies;
  std::vector<cplx> s21;
};

struct ComplexTrace {
  std::vector<double> frequencies;  // strictly increasing
  std::vector<cplx> s21_mean;
  std::vector<double> sigma_i, sigma_q;  // per-scan standard deviations
  int n_scans = 1;
  std::optional<double> applied_power_w;

  std::size_t size() const { return frequencies.size(); }

  void validate() const {
    const std::size_t n = frequencies.size();
    if (n < 8) throw DomainError("trace needs at least 8 points");
    if (s21_mean.size() != n || sigma_i.size() != n || sigma_q.size() != n)
      throw DomainError("trace arrays have different lengths");
    for (std::size_t k = 1; k < n; ++k)
      if (!(frequencies[k] > frequencies[k - 1])) throw DomainError("trace frequencies must be strictly increasing");
    if (n_scans < 1) throw DomainError("trace needs at least one scan");
    for (std::size_t k = 0; k < n; ++k)
      if (!(sigma_i[k] >= 0.0) || !(sigma_q[k] >= 0.0)) throw DomainError("sigma must be non-negative");
  }

  bool has_zero_sigma() const {
    for (std::size_t k = 0; k < size(); ++k)
      if (sigma_i[k] == 0.0 || sigma_q[k] == 0.0) return true;
    return false;
  }
};

/// Per-point mean and per-quadrature sample standard deviation (n - 1).
inline ComplexTrace aggregate_scans(const std::vector<RawScan>& scans) {
  if (scans.size() < 2) throw DomainError("aggregation needs at least two scans");
  const auto& f = scans.front().frequencies;
  for (const auto& s : scans) {
    if (s.frequencies != f) throw DomainError("scans do not share one frequency grid");
    if (s.s21.size() != f.size()) throw DomainError("scan has a different number of points than frequencies");
  }
  const std::size_t n = f.size();
  const double m = static_cast<double>(scans.size());
  ComplexTrace t;
  t.frequencies = f;
  t.n_scans = static_cast<int>(scans.size());
  t.s21_mean.assign(n, 0.0);
  t.sigma_i.assign(n, 0.0);
  t.sigma_q.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double re = 0.0, im = 0.0;
    for (const auto& s : scans) {
      re += s.s21[k].real();
      im += s.s21[k].imag();
    }
    re /= m;
    im /= m;
    double vr = 0.0, vi = 0.0;
    for (const auto& s : scans) {
      vr += (s.s21[k].real() - re) * (s.s21[k].real() - re);
      vi += (s.s21[k].imag() - im) * (s.s21[k].imag() - im);
    }
    t.s21_mean[k] = {re, im};
    t.sigma_i[k] = std::sqrt(vr / (m - 1.0));
    t.sigma_q[k] = std::sqrt(vi / (m - 1.0));
  }
  t.validate();
  return t;
}

/// Model sweeps with i.i.d. Gaussian noise of standard deviation `noise_sigma`
/// in each quadrature. Deterministic for a given seed.
inline std::vector<RawScan> synth_trace(const ResonanceParams& p, const std::vector<double>& f_grid, double noise_sigma,
                                        int n_scans, std::uint64_t seed) {
  p.validate();
  pkgloss::detail::require_non_negative(noise_sigma, "noise sigma");
  if (n_scans < 1) throw DomainError("n_scans must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> clean(f_grid.size());
  for (std::size_t k = 0; k < f_grid.size(); ++k) clean[k] = model_s21(p, f_grid[k]);
  std::vector<RawScan> out(static_cast<std::size_t>(n_scans));
  for (auto& scan : out) {
    scan.frequencies = f_grid;
    scan.s21 = clean;
    if (noise_sigma > 0.0)
      for (auto& z : scan.s21) {
        const double re = gauss(rng), im = gauss(rng);
        z += cplx(noise_sigma * re, noise_sigma * im);
      }
  }
  return out;
}

/// Uniform grid of `n` points spanning f0 +- half_span_linewidths * f0/Ql.
inline std::vector<double> linewidth_grid(const ResonanceParams& p, double half_span_linewidths, std::size_t n) {
  p.validate();
  if (n < 2) throw DomainError("grid needs at least two points");
  const double half = half_span_linewidths * p.f0_hz / p.q_loaded;
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k)
    f[k] = p.f0_hz - half + 2.0 * half * static_cast<double>(k) / static_cast<double>(n - 1);
  return f;
}

/// alpha and tau either join the fit or stay at their estimate from the off-resonance points.
enum class BaselineMode { fit, hold_delay };

struct FitOptions {
  BaselineMode baseline = BaselineMode::fit;
  int max_iterations = 500;
  double step_tolerance = 1e-11;  // in scaled parameter units
  // Sandwich covariance from the fit residuals. Stays valid when the weights
  // come from sample standard deviations of a few scans. When false, the
  // covariance is (J^T W J)^-1.
  bool robust_covariance = true;
};

inline constexpr int n_params = 7;
inline const char* const parameter_names[n_params] = {"f0_hz", "q_loaded", "q_c_mag", "phi", "amp", "alpha", "tau_s"};

struct FitResult {
  ResonanceParams params;
  double q_internal = 0.0;
  double q_internal_stderr = 0.0;
  bool q_internal_physical = true;
  Eigen::Matrix<double, n_params, n_params> covariance = Eigen::Matrix<double, n_params, n_params>::Zero();
  double chi2 = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
  bool uniform_weights = false;
  std::optional<double> photon_number;
  std::vector<std::string> warnings;

  double stderr_of(int k) const { return std::sqrt(std::max(0.0, covariance(k, k))); }
};

namespace detail {

// Scaled parameter vector:
//   x0 = (f0 - f_ref) / linewidth_ref   x1 = ln Ql   x2 = ln Qc   x3 = phi
//   x4 = ln a   x5 = alpha - 2 pi f_c tau   x6 = 2 pi span tau
// The delay is referenced to the centre frequency f_c so that x5 and x6 are
// nearly uncorrelated.
struct Scaling {
  double f_ref = 0.0, linewidth = 0.0, f_c = 0.0, span = 0.0;

  Eigen::Matrix<double, n_params, 1> to_x(const ResonanceParams& p) const {
    Eigen::Matrix<double, n_params, 1> x;
    x << (p.f0_hz - f_ref) / linewidth, std::log(p.q_loaded), std::log(p.q_c_mag), p.phi, std::log(p.amp),
        p.alpha - 2.0 * pi * f_c * p.tau_s, 2.0 * pi * span * p.tau_s;
    return x;
  }

  ResonanceParams from_x(const Eigen::Matrix<double, n_params, 1>& x) const {
    ResonanceParams p;
    p.f0_hz = f_ref + x(0) * linewidth;
    p.q_loaded = std::exp(x(1));
    p.q_c_mag = std::exp(x(2));
    p.phi = x(3);
    p.amp = std::exp(x(4));
    p.tau_s = x(6) / (2.0 * pi * span);
    p.alpha = x(5) + 2.0 * pi * f_c * p.tau_s;
    return p;
  }

  // d(natural) / d(x) at x, natural = {f0, Ql, Qc, phi, a, alpha, tau}
  Eigen::Matrix<double, n_params, n_params> jacobian(const ResonanceParams& p) const {
    Eigen::Matrix<double, n_params, n_params> t = Eigen::Matrix<double, n_params, n_params>::Zero();
    t(0, 0) = linewidth;
    t(1, 1) = p.q_loaded;
    t(2, 2) = p.q_c_mag;
    t(3, 3) = 1.0;
    t(4, 4) = p.amp;
    t(5, 5) = 1.0;
    t(5, 6) = f_c / span;
    t(6, 6) = 1.0 / (2.0 * pi * span);
    return t;
  }
};

struct Problem {
  const ComplexTrace& trace;
  Scaling scaling;
  std::vector<double> w_i, w_q;  // 1 / sigma of the mean
  std::array<bool, n_params> active{};

  double cost(const ResonanceParams& p) const {
    double s = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const cplx r = trace.s21_mean[k] - model_s21(p, trace.frequencies[k]);
      s += r.real() * r.real() * w_i[k] * w_i[k] + r.imag() * r.imag() * w_q[k] * w_q[k];
    }
    return s;
  }

  // Residuals r = (data - model) * w and the model Jacobian dm/dx * w.
  void linearize(const Eigen::Matrix<double, n_params, 1>& x, Eigen::VectorXd& r, Eigen::MatrixXd& jm) const {
    const std::size_t n = trace.size();
    r.resize(2 * static_cast<Eigen::Index>(n));
    jm.setZero(2 * static_cast<Eigen::Index>(n), n_params);
    const ResonanceParams p = scaling.from_x(x);
    const cplx i(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double f = trace.frequencies[k];
      const cplx b = p.amp * std::exp(i * (x(5) - (f - scaling.f_c) / scaling.span * x(6)));
      const cplx d = 1.0 + 2.0 * i * p.q_loaded * (f / p.f0_hz - 1.0);
      const cplx s = (p.q_loaded / p.q_c_mag) * std::exp(i * p.phi) / d;
      const cplx m = b * (1.0 - s);
      const cplx bs = b * s;
      cplx dm[n_params];
      dm[0] = -bs * 2.0 * i * p.q_loaded * f / (p.f0_hz * p.f0_hz * d) * scaling.linewidth;
      dm[1] = -bs / d;
      dm[2] = bs;
      dm[3] = -i * bs;
      dm[4] = m;
      dm[5] = i * m;
      dm[6] = -i * (f - scaling.f_c) / scaling.span * m;
      const cplx res = trace.s21_mean[k] - m;
      const auto row = static_cast<Eigen::Index>(2 * k);
      r(row) = res.real() * w_i[k];
      r(row + 1) = res.imag() * w_q[k];
      for (int c = 0; c < n_params; ++c) {
        if (!active[static_cast<std::size_t>(c)]) continue;
        jm(row, c) = dm[c].real() * w_i[k];
        jm(row + 1, c) = dm[c].imag() * w_q[k];
      }
    }
  }
};

inline double mean_of(const std::vector<double>& v, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t k = a; k < b; ++k) s += v[k];
  return s / static_cast<double>(b - a);
}

}  // namespace detail

/// Derivative-free starting point:
///   delay and baseline from the off-resonance ends of the sweep,
///   f0 at minimum |S21|,
///   Ql from the full width at half maximum of |1 - S21/baseline|^2 (a Lorentzian),
///   |Qc| and phi from an algebraic circle fit of S21/baseline.
inline ResonanceParams initial_guess(const ComplexTrace& t) {
  t.validate();
  const std::size_t n = t.size();
  const auto& f = t.frequencies;
  const auto& z = t.s21_mean;

  std::size_t kmin = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(z[k]) < std::abs(z[kmin])) kmin = k;
  const auto margin = static_cast<std::size_t>(std::ceil(0.02 * static_cast<double>(n)));
  if (kmin < margin || kmin + margin >= n)
    throw DomainError("resonance not bracketed: minimum |S21| lies at the edge of the sweep");

  // delay: local phase slopes at each end fix the 2 pi ambiguity of the end-to-end phase difference
  const std::size_t edge = std::max<std::size_t>(3, n / 20);
  auto local_slope = [&](std::size_t a, std::size_t b) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, prev = std::arg(z[a]), unwrapped = prev;
    for (std::size_t k = a; k < b; ++k) {
      const double ph = std::arg(z[k]);
      if (k > a) unwrapped += wrap_angle(ph - prev);
      prev = ph;
      const double x = f[k] - f[a];
      sx += x;
      sy += unwrapped;
      sxx += x * x;
      sxy += x * unwrapped;
    }
    const double m = static_cast<double>(b - a);
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  const double slope_local = 0.5 * (local_slope(0, edge) + local_slope(n - edge, n));
  cplx left = 0.0, right = 0.0;
  for (std::size_t k = 0; k < edge; ++k) {
    left += z[k];
    right += z[n - edge + k];
  }
  const double fl = detail::mean_of(f, 0, edge), fr = detail::mean_of(f, n - edge, n);
  const double expected = slope_local * (fr - fl);
  double dphase = std::arg(right / left);
  dphase += 2.0 * pi * std::round((expected - dphase) / (2.0 * pi));
  const double tau = -dphase / (2.0 * pi * (fr - fl));

  cplx base = 0.0;
  for (std::size_t k = 0; k < edge; ++k) {
    base += z[k] * std::exp(cplx(0.0, 2.0 * pi * f[k] * tau));
    base += z[n - edge + k] * std::exp(cplx(0.0, 2.0 * pi * f[n - edge + k] * tau));
  }
  base /= static_cast<double>(2 * edge);
  if (std::abs(base) == 0.0) throw DomainError("trace has zero off-resonance amplitude");

  std::vector<cplx> u(n);
  std::vector<double> depth(n);
  for (std::size_t k = 0; k < n; ++k) {
    u[k] = z[k] * std::exp(cplx(0.0, 2.0 * pi * f[k] * tau)) / base;
    depth[k] = std::norm(1.0 - u[k]);
  }

  ResonanceParams p;
  p.f0_hz = f[kmin];
  p.amp = std::abs(base);
  p.alpha = std::arg(base);
  p.tau_s = tau;

  std::size_t kpk = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (depth[k] > depth[kpk]) kpk = k;
  const double half = 0.5 * depth[kpk];
  std::size_t lo = kpk, hi = kpk;
  while (lo > 0 && depth[lo] > half) --lo;
  while (hi + 1 < n && depth[hi] > half) ++hi;
  auto cross = [&](std::size_t a, std::size_t b) {
    if (depth[a] == depth[b]) return f[a];
    return f[a] + (half - depth[a]) * (f[b] - f[a]) / (depth[b] - depth[a]);
  };
  double width = cross(hi - 1, hi) - cross(lo, lo + 1);
  if (!(width > 0.0)) width = 2.0 * (f[1] - f[0]);
  p.q_loaded = p.f0_hz / width;

  // Kasa circle fit over the resonance (within ~4 half-widths of the peak)
  const double window = 4.0 * width;
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  std::size_t used = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(f[k] - f[kpk]) > window) continue;
    const double x = u[k].real(), y = u[k].imag();
    const Eigen::Vector3d row(x, y, 1.0);
    a += row * row.transpose();
    rhs += row * (x * x + y * y);
    ++used;
  }
  double qc = 2.0 * p.q_loaded, phi = 0.0;
  if (used >= 5) {
    const Eigen::Vector3d c = a.ldlt().solve(rhs);
    const cplx centre(0.5 * c(0), 0.5 * c(1));
    const double radius = std::sqrt(std::max(0.0, c(2) + std::norm(centre)));
    if (radius > 0.0 && std::isfinite(radius)) {
      qc = p.q_loaded / (2.0 * radius);
      phi = std::arg(1.0 - centre);
    }
  }
  p.q_c_mag = qc;
  p.phi = wrap_angle(phi);
  return p;
}

/// Mean photon number n = 2 Ql^2 P / (|Qc| hbar omega0^2), P the power at the device.
inline double photon_number(double p_applied_w, double f0_hz, double q_loaded, double q_c_mag) {
  pkgloss::detail::require_positive(p_applied_w, "applied power");
  pkgloss::detail::require_positive(f0_hz, "f0");
  pkgloss::detail::require_positive(q_loaded, "loaded Q");
  pkgloss::detail::require_positive(q_c_mag, "|Qc|");
  const double w = angular_frequency(f0_hz);
  return 2.0 * q_loaded * q_loaded * p_applied_w / (q_c_mag * PhysicalConstants::hbar * w * w);
}

/// Weighted Levenberg-Marquardt fit. Each quadrature is weighted by the
/// standard error of the mean, sigma/sqrt(n_scans). If any sigma is zero the
/// fit falls back to uniform weights. See FitOptions for the covariance.
inline FitResult fit(const ComplexTrace& trace, std::optional<ResonanceParams> init = std::nullopt,
                     const FitOptions& opt = {}) {
  trace.validate();
  FitResult res;
  const ResonanceParams start = init ? *init : initial_guess(trace);
  start.validate();

  const std::size_t n = trace.size();
  detail::Problem prob{trace, {}, std::vector<double>(n), std::vector<double>(n), {}};
  res.uniform_weights = trace.has_zero_sigma();
  const double root_n = std::sqrt(static_cast<double>(trace.n_scans));
  for (std::size_t k = 0; k < n; ++k) {
    prob.w_i[k] = res.uniform_weights ? 1.0 : root_n / trace.sigma_i[k];
    prob.w_q[k] = res.uniform_weights ? 1.0 : root_n / trace.sigma_q[k];
  }
  if (res.uniform_weights) res.warnings.push_back("zero standard deviation in trace; using uniform weights");
  prob.active.fill(true);
  if (opt.baseline == BaselineMode::hold_delay) prob.active[6] = false;

  auto& sc = prob.scaling;
  sc.f_ref = start.f0_hz;
  sc.linewidth = start.f0_hz / start.q_loaded;
  sc.f_c = 0.5 * (trace.frequencies.front() + trace.frequencies.back());
  sc.span = trace.frequencies.back() - trace.frequencies.front();

  using Vec = Eigen::Matrix<double, n_params, 1>;
  using Mat = Eigen::Matrix<double, n_params, n_params>;
  Vec x = sc.to_x(start);
  Eigen::VectorXd r;
  Eigen::MatrixXd jm;
  prob.linearize(x, r, jm);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool done = false;
  while (it < opt.max_iterations && !done) {
    ++it;
    const Mat jtj = jm.transpose() * jm;
    const Vec g = jm.transpose() * r;
    bool accepted = false;
    while (!accepted) {
      Mat a = jtj;
      for (int c = 0; c < n_params; ++c) {
        if (!prob.active[static_cast<std::size_t>(c)]) {
          a.row(c).setZero();
          a.col(c).setZero();
          a(c, c) = 1.0;
        } else {
          a(c, c) += lambda * std::max(jtj(c, c), 1e-30);
        }
      }
      const Vec step = a.ldlt().solve(g);
      Vec trial = x + step;
      Eigen::VectorXd r_trial;
      Eigen::MatrixXd j_trial;
      prob.linearize(trial, r_trial, j_trial);
      const double c_trial = r_trial.squaredNorm();
      if (std::isfinite(c_trial) && c_trial <= cost) {
        const double rel = (cost - c_trial) / std::max(cost, 1e-300);
        x = trial;
        r = std::move(r_trial);
        jm = std::move(j_trial);
        cost = c_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (step.cwiseAbs().maxCoeff() < opt.step_tolerance || rel < 1e-15) done = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e16) {
          done = true;  // no downhill step left at machine precision
          break;
        }
      }
    }
  }
  res.iterations = it;
  res.converged = done;
  if (!done) res.warnings.push_back("fit did not converge within the iteration cap");

  x(3) = wrap_angle(x(3));
  res.params = sc.from_x(x);
  res.params.alpha = wrap_angle(res.params.alpha);
  res.chi2 = cost;
  res.n_points = n;

  const Mat jtj = jm.transpose() * jm;
  Mat info = jtj;
  for (int c = 0; c < n_params; ++c)
    if (!prob.active[static_cast<std::size_t>(c)]) {
      info.row(c).setZero();
      info.col(c).setZero();
      info(c, c) = 1.0;
    }
  const Mat bread = info.ldlt().solve(Mat::Identity());
  int free_params = 0;
  for (bool a : prob.active) free_params += a ? 1 : 0;
  const double rows = static_cast<double>(2 * n);
  const double dof = std::max(rows - free_params, 1.0);
  Mat cov_x;
  if (opt.robust_covariance) {
    const Eigen::MatrixXd jr = r.asDiagonal() * jm;
    const Mat meat = jr.transpose() * jr;
    cov_x = bread * meat * bread * (rows / dof);
  } else {
    cov_x = bread;
    if (res.uniform_weights) cov_x *= cost / dof;
  }
  for (int c = 0; c < n_params; ++c)
    if (!prob.active[static_cast<std::size_t>(c)]) {
      cov_x.row(c).setZero();
      cov_x.col(c).setZero();
    }
  const Mat t = sc.jacobian(res.params);
  res.covariance = t * cov_x * t.transpose();

  const double ql = res.params.q_loaded, qc = res.params.q_c_mag, phi = res.params.phi;
  try {
    res.q_internal = qi_from_params(ql, qc, phi);
    const double q2 = res.q_internal * res.q_internal;
    Vec grad = Vec::Zero();
    grad(1) = q2 / (ql * ql);
    grad(2) = -q2 * std::cos(phi) / (qc * qc);
    grad(3) = -q2 * std::sin(phi) / qc;
    res.q_internal_stderr = std::sqrt(std::max(0.0, grad.dot(res.covariance * grad)));
  } catch (const DomainError&) {
    res.q_internal_physical = false;
    res.q_internal = 1.0 / (1.0 / ql - std::cos(phi) / qc);
    res.warnings.push_back("fitted parameters give a non-physical internal Q");
  }
  if (trace.applied_power_w) res.photon_number = photon_number(*trace.applied_power_w, res.params.f0_hz, ql, qc);
  return res;
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

struct SweepPoint {
  double photon_number = 0.0;
  double q_internal = 0.0;
};

struct SweepAnalysis {
  double q_i_max = 0.0;
  double power_law_exponent = 0.0;
  std::size_t points_in_window = 0;
};

/// q_i_max over all points; exponent = least-squares slope of ln Qi against
/// ln n over the points with n inside [n_min, n_max].
inline SweepAnalysis power_sweep_analysis(const std::vector<SweepPoint>& points, double n_min = 0.0,
                                          double n_max = INFINITY) {
  if (points.size() < 3) throw DomainError("power sweep analysis needs at least three points");
  SweepAnalysis out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& p : points) {
    pkgloss::detail::require_positive(p.photon_number, "photon number");
    pkgloss::detail::require_positive(p.q_internal, "internal Q");
    out.q_i_max = std::max(out.q_i_max, p.q_internal);
    if (p.photon_number < n_min || p.photon_number > n_max) continue;
    const double x = std::log(p.photon_number), y = std::log(p.q_internal);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  out.points_in_window = m;
  const double md = static_cast<double>(m);
  const double den = md * sxx - sx * sx;
  if (m < 2 || !(den > 0.0)) throw DomainError("photon-number window holds fewer than two distinct points");
  out.power_law_exponent = (md * sxy - sx * sy) / den;
  return out;
}

}  // namespace pkgloss::fit
