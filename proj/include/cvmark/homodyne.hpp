#pragma once

// Synthetic homodyne measurement record: quadrature sample traces for the
// six polarization-selected modes with a local-oscillator phase sweep, plus
// the shot-noise calibration trace.

#include "cvmark/covariance.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvmark {

/// The six detectable modes: the signal a, the idler b and their balanced
/// combinations c = (a+b)/sqrt2, d = (a-b)/sqrt2, e = (ia+b)/sqrt2,
/// f = (ia-b)/sqrt2.
enum class Mode { a = 0, b, c, d, e, f };

inline constexpr std::array<Mode, 6> kAllModes{Mode::a, Mode::b, Mode::c,
                                               Mode::d, Mode::e, Mode::f};

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::a: return "a";
    case Mode::b: return "b";
    case Mode::c: return "c";
    case Mode::d: return "d";
    case Mode::e: return "e";
    case Mode::f: return "f";
  }
  return "?";
}

inline Mode mode_from_name(const std::string& s) {
  for (Mode m : kAllModes)
    if (s == mode_name(m)) return m;
  throw std::invalid_argument("unknown mode name: " + s);
}

/// Quadrature coefficient vectors of a selected mode in the (X1,Y1,X2,Y2)
/// basis: X_mode = u.K, Y_mode = v.K.
struct ModeVectors {
  Vec4 u;
  Vec4 v;
};

inline ModeVectors mode_vectors(Mode m) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (m) {
    case Mode::a: return {Vec4(1, 0, 0, 0), Vec4(0, 1, 0, 0)};
    case Mode::b: return {Vec4(0, 0, 1, 0), Vec4(0, 0, 0, 1)};
    case Mode::c: return {Vec4(r, 0, r, 0), Vec4(0, r, 0, r)};
    case Mode::d: return {Vec4(r, 0, -r, 0), Vec4(0, r, 0, -r)};
    // e = (ia+b)/sqrt2: X_e = (X2 - Y1)/sqrt2, Y_e = (X1 + Y2)/sqrt2.
    case Mode::e: return {Vec4(0, -r, r, 0), Vec4(r, 0, 0, r)};
    // f = (ia-b)/sqrt2: X_f = -(Y1 + X2)/sqrt2, Y_f = (X1 - Y2)/sqrt2.
    case Mode::f: return {Vec4(0, -r, -r, 0), Vec4(r, 0, 0, -r)};
  }
  throw std::invalid_argument("mode_vectors: bad mode");
}

struct QuadratureMoments {
  double var_x = 0.0;
  double var_y = 0.0;
  double cov_xy = 0.0;
};

/// Second moments of the selected single mode, u^T sigma u etc.
inline QuadratureMoments mode_moments(const Mat4& sigma, Mode m) {
  const ModeVectors mv = mode_vectors(m);
  QuadratureMoments q;
  q.var_x = mv.u.dot(sigma * mv.u);
  q.var_y = mv.v.dot(sigma * mv.v);
  q.cov_xy = mv.u.dot(sigma * mv.v);
  return q;
}

inline QuadratureMoments mode_moments(const StandardForm& sf, Mode m) {
  return mode_moments(sf.embed(), m);
}

/// Rotated-quadrature variance at local-oscillator phase theta.
inline double quadrature_variance(const QuadratureMoments& q, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return c * c * q.var_x + s * s * q.var_y + 2.0 * s * c * q.cov_xy;
}

struct SimConfig {
  std::size_t samples_per_trace = 1'000'000;
  double visibility = 0.98;
  double electronic_noise_db_below_shot = 16.0;
  std::uint64_t seed = 0;

  /// Detection efficiency of the visibility mismatch.
  double efficiency() const { return visibility * visibility; }
  /// Additive electronic noise variance in shot-noise units.
  double electronic_noise_variance() const {
    return kVacuumVariance * std::pow(10.0, -electronic_noise_db_below_shot / 10.0);
  }

  void validate() const {
    if (samples_per_trace == 0) throw std::invalid_argument("sim config: zero samples");
    if (!(visibility > 0.0 && visibility <= 1.0))
      throw std::invalid_argument("sim config: visibility outside (0, 1]");
    if (!std::isfinite(electronic_noise_db_below_shot))
      throw std::invalid_argument("sim config: non-finite noise floor");
  }

  static SimConfig ideal(std::size_t samples, std::uint64_t seed) {
    SimConfig cfg;
    cfg.samples_per_trace = samples;
    cfg.visibility = 1.0;
    cfg.electronic_noise_db_below_shot = 300.0;
    cfg.seed = seed;
    return cfg;
  }
};

/// Phase-tagged quadrature samples of one selected mode.
struct HomodyneTrace {
  std::string mode_label;
  bool calibrated = false;
  std::uint64_t seed = 0;
  std::vector<double> phases;  // radians, monotone nondecreasing in [0, 2pi)
  std::vector<double> values;
};

namespace detail {

inline HomodyneTrace simulate_with_variance(const char* label, const SimConfig& cfg,
                                            const QuadratureMoments& q) {
  cfg.validate();
  HomodyneTrace tr;
  tr.mode_label = label;
  tr.seed = cfg.seed;
  const std::size_t n = cfg.samples_per_trace;
  tr.phases.resize(n);
  tr.values.resize(n);
  const double eta = cfg.efficiency();
  const double floor = cfg.electronic_noise_variance();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    const double var =
        eta * quadrature_variance(q, theta) + (1.0 - eta) * kVacuumVariance + floor;
    tr.phases[i] = theta;
    tr.values[i] = std::sqrt(var) * unit(rng);
  }
  return tr;
}

}  // namespace detail

/// Phase sweep over [0, 2pi); each sample is zero-mean Gaussian with
/// variance eta Var(theta) + (1 - eta)/2 + electronic floor, eta the
/// squared visibility. Deterministic for a fixed seed.
inline HomodyneTrace simulate_trace(const Mat4& sigma, Mode m, const SimConfig& cfg) {
  return detail::simulate_with_variance(mode_name(m), cfg, mode_moments(sigma, m));
}

inline HomodyneTrace simulate_trace(const StandardForm& sf, Mode m, const SimConfig& cfg) {
  return simulate_trace(sf.embed(), m, cfg);
}

/// Blocked-input calibration trace: raw variance 1/2 + electronic floor,
/// phase independent.
inline HomodyneTrace simulate_shot_noise(const SimConfig& cfg) {
  return detail::simulate_with_variance("shot", cfg,
                                        QuadratureMoments{kVacuumVariance, kVacuumVariance, 0.0});
}

}  // namespace cvmark
