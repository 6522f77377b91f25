#pragma once

// From seven homodyne traces (shot-noise calibration + six modes) to a
// calibrated 4x4 covariance matrix with per-element uncertainties, marker
// estimates and nonparametric bootstrap error bars.

#include "cvmark/channel.hpp"
#include "cvmark/covariance.hpp"
#include "cvmark/homodyne.hpp"
#include "cvmark/markers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvmark {

struct ReconstructionConfig {
  int phase_bins = 32;
  std::size_t min_bin_count = 100;
  int resamples = 200;
  std::uint64_t seed = 1;
  // When enabled, this constant is subtracted from every fitted variance
  // (calibrated units). By default electronic noise stays folded into the
  // shot-noise calibration.
  bool subtract_electronic_noise = false;
  double electronic_noise_variance = 0.0;

  void validate() const {
    if (phase_bins < 16)
      throw std::invalid_argument("reconstruction: need at least 16 phase bins");
    if (min_bin_count < 8)
      throw std::invalid_argument("reconstruction: minimum bin occupancy too small");
  }
};

/// Pooled (mean-removed) sample variance of a trace.
inline double pooled_variance(const HomodyneTrace& tr) {
  const std::size_t n = tr.values.size();
  if (n < 2) throw std::invalid_argument("trace: too few samples");
  double mean = 0.0;
  for (double v : tr.values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : tr.values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

/// Rescales a trace so the shot-noise reference maps to variance 1/2.
inline HomodyneTrace calibrate(const HomodyneTrace& trace, const HomodyneTrace& shot) {
  if (shot.values.empty() || trace.values.empty())
    throw std::invalid_argument("calibrate: empty trace");
  const double vshot = pooled_variance(shot);
  if (!(vshot > 0.0)) throw std::domain_error("calibrate: non-positive shot-noise variance");
  const double k = std::sqrt(kVacuumVariance / vshot);
  HomodyneTrace out = trace;
  for (double& v : out.values) v *= k;
  out.calibrated = true;
  return out;
}

/// Fitted second moments of one mode with standard errors.
struct ModeMomentsEstimate {
  Mode mode = Mode::a;
  double var_x = 0.0, var_y = 0.0, cov_xy = 0.0;
  double se_var_x = 0.0, se_var_y = 0.0, se_cov_xy = 0.0;
  double chi2_per_dof = 0.0;
};

namespace detail {

struct BinStats {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_cos2 = 0.0;
  double sum_sin2 = 0.0;
};

inline int bin_of(double phase, int bins) {
  int b = static_cast<int>(phase * bins / (2.0 * M_PI));
  return std::clamp(b, 0, bins - 1);
}

inline std::vector<BinStats> bin_trace(const HomodyneTrace& tr, int bins) {
  std::vector<BinStats> st(bins);
  for (std::size_t i = 0; i < tr.values.size(); ++i) {
    BinStats& b = st[bin_of(tr.phases[i], bins)];
    const double v = tr.values[i];
    b.count++;
    b.sum += v;
    b.sum_sq += v * v;
    b.sum_cos2 += std::cos(2.0 * tr.phases[i]);
    b.sum_sin2 += std::sin(2.0 * tr.phases[i]);
  }
  return st;
}

struct VarianceFit {
  double a = 0.0, b = 0.0, c = 0.0;  // Var(theta) = a + b cos2theta + c sin2theta
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double chi2_per_dof = 0.0;
};

// Weighted linear least squares of binned variances against
// [1, cos 2theta, sin 2theta]; the regressors are the per-bin means of the
// actual sample phases, which removes the finite-bin-width attenuation.
// `scale2` applies a calibration factor to the variances, `floor_sub` is
// subtracted from each bin variance after scaling.
inline VarianceFit fit_variance_bins(const std::vector<BinStats>& bins, double scale2,
                                     double floor_sub, std::size_t min_count) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  std::vector<std::array<double, 5>> rows;  // regressors, value, weight
  rows.reserve(bins.size());
  for (const BinStats& b : bins) {
    if (b.count < std::max<std::size_t>(min_count, 2))
      throw std::runtime_error("fit_moments: insufficient samples per phase bin");
    const double n = static_cast<double>(b.count);
    const double mean = b.sum / n;
    double var = (b.sum_sq - n * mean * mean) / (n - 1.0);
    if (!(var > 0.0)) throw std::domain_error("fit_moments: degenerate zero-variance bin");
    var *= scale2;
    const double se = var * std::sqrt(2.0 / (n - 1.0));
    var -= floor_sub;
    const double w = 1.0 / (se * se);
    const Eigen::Vector3d x(1.0, b.sum_cos2 / n, b.sum_sin2 / n);
    normal += w * x * x.transpose();
    rhs += w * x * var;
    rows.push_back({x[1], x[2], var, w, 0.0});
  }
  VarianceFit fit;
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  const Eigen::Vector3d beta = ldlt.solve(rhs);
  fit.a = beta[0];
  fit.b = beta[1];
  fit.c = beta[2];
  fit.cov = normal.inverse();
  double chi2 = 0.0;
  for (const auto& r : rows) {
    const double pred = beta[0] + beta[1] * r[0] + beta[2] * r[1];
    chi2 += (r[2] - pred) * (r[2] - pred) * r[3];
  }
  const double dof = static_cast<double>(rows.size()) - 3.0;
  fit.chi2_per_dof = dof > 0 ? chi2 / dof : 0.0;
  return fit;
}

inline ModeMomentsEstimate moments_from_fit(Mode mode, const VarianceFit& fit) {
  ModeMomentsEstimate est;
  est.mode = mode;
  est.var_x = fit.a + fit.b;
  est.var_y = fit.a - fit.b;
  est.cov_xy = fit.c;
  est.se_var_x = std::sqrt(std::max(fit.cov(0, 0) + fit.cov(1, 1) + 2.0 * fit.cov(0, 1), 0.0));
  est.se_var_y = std::sqrt(std::max(fit.cov(0, 0) + fit.cov(1, 1) - 2.0 * fit.cov(0, 1), 0.0));
  est.se_cov_xy = std::sqrt(std::max(fit.cov(2, 2), 0.0));
  est.chi2_per_dof = fit.chi2_per_dof;
  return est;
}

}  // namespace detail

/// Bins a calibrated trace by phase and fits the binned variances to
/// A + B cos 2theta + C sin 2theta. VarX = A+B, VarY = A-B, CovXY = C.
inline ModeMomentsEstimate fit_moments(const HomodyneTrace& trace,
                                       const ReconstructionConfig& cfg = {}) {
  cfg.validate();
  if (!trace.calibrated)
    throw std::invalid_argument("fit_moments: trace must be calibrated first");
  const auto bins = detail::bin_trace(trace, cfg.phase_bins);
  const double floor_sub =
      cfg.subtract_electronic_noise ? cfg.electronic_noise_variance : 0.0;
  const detail::VarianceFit fit =
      detail::fit_variance_bins(bins, 1.0, floor_sub, cfg.min_bin_count);
  if (fit.chi2_per_dof > 5.0)
    throw std::runtime_error("fit_moments: non-stationary trace (chi2/dof " +
                             std::to_string(fit.chi2_per_dof) + ")");
  ModeMomentsEstimate est = detail::moments_from_fit(mode_from_name(trace.mode_label), fit);
  if (!(est.var_x > 0.0) || !(est.var_y > 0.0))
    throw std::domain_error("fit_moments: non-positive fitted variance");
  return est;
}

/// Reconstructed covariance matrix with per-element standard errors.
struct ReconstructedCm {
  Mat4 cm = Mat4::Zero();
  Mat4 errors = Mat4::Zero();
  double residual_chi2_per_dof = 0.0;
  bool physical = false;
  double margin = 0.0;
};

namespace detail {

inline constexpr std::array<std::pair<int, int>, 10> kElementIndex{
    {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

inline Eigen::Matrix<double, 1, 10> design_row(const Vec4& u, const Vec4& v) {
  Eigen::Matrix<double, 1, 10> row;
  for (int k = 0; k < 10; ++k) {
    const auto [i, j] = kElementIndex[k];
    row[k] = u[i] * v[j] + (i != j ? u[j] * v[i] : 0.0);
  }
  return row;
}

}  // namespace detail

/// Solves the overdetermined linear map from the 10 independent covariance
/// elements to the 18 fitted mode moments by weighted least squares.
/// Weights are inverse squared standard errors; if any standard error is
/// zero (analytically exact moments) the fit falls back to unweighted.
/// The result is never coerced onto the physical cone; the bona-fide flag
/// and margin are reported instead.
inline ReconstructedCm assemble_cm(const std::vector<ModeMomentsEstimate>& moments) {
  if (moments.size() != 6) throw std::invalid_argument("assemble_cm: need exactly six modes");
  std::array<bool, 6> seen{};
  for (const auto& est : moments) {
    if (seen[static_cast<int>(est.mode)])
      throw std::invalid_argument(std::string("assemble_cm: duplicate mode ") +
                                  mode_name(est.mode));
    seen[static_cast<int>(est.mode)] = true;
  }
  for (int k = 0; k < 6; ++k)
    if (!seen[k])
      throw std::invalid_argument(std::string("assemble_cm: missing mode ") +
                                  mode_name(kAllModes[k]));

  bool weighted = true;
  for (const auto& est : moments)
    if (est.se_var_x <= 0.0 || est.se_var_y <= 0.0 || est.se_cov_xy <= 0.0) weighted = false;

  Eigen::Matrix<double, 18, 10> design;
  Eigen::Matrix<double, 18, 1> target;
  Eigen::Matrix<double, 18, 1> weight;
  int r = 0;
  for (const auto& est : moments) {
    const ModeVectors mv = mode_vectors(est.mode);
    design.row(r) = detail::design_row(mv.u, mv.u);
    target[r] = est.var_x;
    weight[r] = weighted ? 1.0 / (est.se_var_x * est.se_var_x) : 1.0;
    ++r;
    design.row(r) = detail::design_row(mv.v, mv.v);
    target[r] = est.var_y;
    weight[r] = weighted ? 1.0 / (est.se_var_y * est.se_var_y) : 1.0;
    ++r;
    design.row(r) = detail::design_row(mv.u, mv.v);
    target[r] = est.cov_xy;
    weight[r] = weighted ? 1.0 / (est.se_cov_xy * est.se_cov_xy) : 1.0;
    ++r;
  }

  const Eigen::Matrix<double, 10, 10> normal =
      design.transpose() * weight.asDiagonal() * design;
  if (Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>>(normal).rank() < 10)
    throw std::runtime_error("assemble_cm: rank-deficient design matrix");
  const Eigen::Matrix<double, 10, 1> rhs =
      design.transpose() * weight.asDiagonal() * target;
  const Eigen::Matrix<double, 10, 1> sol = normal.ldlt().solve(rhs);
  const Eigen::Matrix<double, 10, 10> cov = normal.inverse();

  ReconstructedCm out;
  for (int k = 0; k < 10; ++k) {
    const auto [i, j] = detail::kElementIndex[k];
    out.cm(i, j) = out.cm(j, i) = sol[k];
    out.errors(i, j) = out.errors(j, i) = weighted ? std::sqrt(std::max(cov(k, k), 0.0)) : 0.0;
  }
  const Eigen::Matrix<double, 18, 1> resid = target - design * sol;
  out.residual_chi2_per_dof = (resid.array().square() * weight.array()).sum() / 8.0;
  const BonaFide bona = is_bona_fide(out.cm);
  out.physical = bona.physical;
  out.margin = bona.margin;
  return out;
}

/// Per-phase-bin excess kurtosis with its sampling error.
struct GaussianityBin {
  std::size_t count = 0;
  double excess_kurtosis = 0.0;
  double standard_error = 0.0;
  bool flagged = false;
};

struct GaussianityReport {
  std::string label;
  std::vector<GaussianityBin> bins;
  bool any_flagged = false;
};

/// Excess kurtosis per phase bin; a bin is flagged when it deviates from
/// zero by more than five standard errors (sqrt(24/N)).
inline GaussianityReport gaussianity_check(const HomodyneTrace& trace, int phase_bins = 32) {
  if (phase_bins < 1) throw std::invalid_argument("gaussianity: bad bin count");
  std::vector<std::vector<double>> buckets(phase_bins);
  for (std::size_t i = 0; i < trace.values.size(); ++i)
    buckets[detail::bin_of(trace.phases[i], phase_bins)].push_back(trace.values[i]);
  GaussianityReport rep;
  rep.label = trace.mode_label;
  rep.bins.reserve(phase_bins);
  for (const auto& bucket : buckets) {
    if (bucket.size() < 8)
      throw std::runtime_error("gaussianity: insufficient samples in phase bin");
    const double n = static_cast<double>(bucket.size());
    double mean = 0.0;
    for (double v : bucket) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : bucket) {
      const double d = v - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    GaussianityBin bin;
    bin.count = bucket.size();
    bin.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    bin.standard_error = std::sqrt(24.0 / n);
    bin.flagged = std::abs(bin.excess_kurtosis) > 5.0 * bin.standard_error;
    rep.any_flagged = rep.any_flagged || bin.flagged;
    rep.bins.push_back(bin);
  }
  return rep;
}

/// Full single-pass reconstruction result.
struct ReconstructionResult {
  ReconstructedCm cm;
  MarkerReport markers;
  std::vector<ModeMomentsEstimate> moments;
  std::vector<GaussianityReport> gaussianity;  // shot first, then modes a..f
};

inline ReconstructionResult reconstruct(const HomodyneTrace& shot,
                                        const std::vector<HomodyneTrace>& mode_traces,
                                        const ReconstructionConfig& cfg = {}) {
  cfg.validate();
  if (mode_traces.size() != 6)
    throw std::invalid_argument("reconstruct: need the six mode traces");
  ReconstructionResult res;
  res.gaussianity.push_back(gaussianity_check(shot, cfg.phase_bins));
  for (const auto& tr : mode_traces) {
    const HomodyneTrace cal = calibrate(tr, shot);
    res.moments.push_back(fit_moments(cal, cfg));
    res.gaussianity.push_back(gaussianity_check(tr, cfg.phase_bins));
  }
  res.cm = assemble_cm(res.moments);
  res.markers = classify(res.cm.cm);
  return res;
}

/// Marker and covariance estimates with nonparametric bootstrap errors.
struct BootstrapSummary {
  ReconstructionResult point;
  Mat4 cm_mean = Mat4::Zero();
  Mat4 cm_sd = Mat4::Zero();
  std::array<double, MarkerReport::kValueCount> marker_mean{};
  std::array<double, MarkerReport::kValueCount> marker_sd{};
  int resamples = 0;
  bool has_transmission = false;
  double transmission_point = kNaN;
  double transmission_mean = kNaN;
  double transmission_sd = kNaN;
  int transmission_failures = 0;
};

namespace detail {

struct PreparedTrace {
  std::vector<int> bin;
  std::vector<double> value;
  std::vector<double> cos2;
  std::vector<double> sin2;
};

inline PreparedTrace prepare_trace(const HomodyneTrace& tr, int bins) {
  PreparedTrace p;
  const std::size_t n = tr.values.size();
  p.bin.resize(n);
  p.value.resize(n);
  p.cos2.resize(n);
  p.sin2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.bin[i] = bin_of(tr.phases[i], bins);
    p.value[i] = tr.values[i];
    p.cos2[i] = std::cos(2.0 * tr.phases[i]);
    p.sin2[i] = std::sin(2.0 * tr.phases[i]);
  }
  return p;
}

inline void resample_bins(const PreparedTrace& p, std::mt19937_64& rng, int bins,
                          std::vector<BinStats>& out) {
  out.assign(bins, BinStats{});
  const std::size_t n = p.value.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    BinStats& b = out[p.bin[j]];
    const double v = p.value[j];
    b.count++;
    b.sum += v;
    b.sum_sq += v * v;
    b.sum_cos2 += p.cos2[j];
    b.sum_sin2 += p.sin2[j];
  }
}

inline double pooled_variance_bins(const std::vector<BinStats>& bins) {
  double n = 0.0, sum = 0.0, sumsq = 0.0;
  for (const BinStats& b : bins) {
    n += static_cast<double>(b.count);
    sum += b.sum;
    sumsq += b.sum_sq;
  }
  if (n < 2.0) throw std::invalid_argument("bootstrap: empty resample");
  const double mean = sum / n;
  return (sumsq - n * mean * mean) / (n - 1.0);
}

}  // namespace detail

/// Nonparametric bootstrap over the samples of each trace. Every resample
/// redraws all seven traces (the calibration factor is re-estimated each
/// time), refits the moments, reassembles the covariance matrix and
/// recomputes the markers. Deterministic for a fixed config seed.
inline BootstrapSummary bootstrap_markers(const HomodyneTrace& shot,
                                          const std::vector<HomodyneTrace>& mode_traces,
                                          const ReconstructionConfig& cfg = {},
                                          bool with_transmission = false) {
  cfg.validate();
  if (cfg.resamples < 2)
    throw std::invalid_argument("bootstrap: need at least two resamples");

  BootstrapSummary out;
  out.point = reconstruct(shot, mode_traces, cfg);
  out.resamples = cfg.resamples;
  out.has_transmission = with_transmission;
  if (with_transmission) {
    try {
      out.transmission_point = infer_transmission(out.point.cm.cm).transmission;
    } catch (const std::exception&) {
      out.transmission_failures++;  // point estimate has no pure-source preimage
    }
  }

  const int bins = cfg.phase_bins;
  const detail::PreparedTrace shot_prep = detail::prepare_trace(shot, bins);
  std::vector<detail::PreparedTrace> mode_prep;
  mode_prep.reserve(6);
  std::vector<Mode> mode_ids;
  for (const auto& tr : mode_traces) {
    mode_prep.push_back(detail::prepare_trace(tr, bins));
    mode_ids.push_back(mode_from_name(tr.mode_label));
  }

  const double floor_sub =
      cfg.subtract_electronic_noise ? cfg.electronic_noise_variance : 0.0;

  Eigen::Matrix4d cm_sum = Mat4::Zero(), cm_sum2 = Mat4::Zero();
  std::array<double, MarkerReport::kValueCount> mk_sum{}, mk_sum2{};
  std::array<std::size_t, MarkerReport::kValueCount> mk_count{};
  double t_sum = 0.0, t_sum2 = 0.0;
  std::size_t t_count = 0;

  std::mt19937_64 rng(cfg.seed);
  std::vector<detail::BinStats> scratch;
  for (int r = 0; r < cfg.resamples; ++r) {
    detail::resample_bins(shot_prep, rng, bins, scratch);
    const double vshot = detail::pooled_variance_bins(scratch);
    if (!(vshot > 0.0)) throw std::domain_error("bootstrap: degenerate shot-noise resample");
    const double scale2 = kVacuumVariance / vshot;

    std::vector<ModeMomentsEstimate> moments;
    moments.reserve(6);
    for (std::size_t t = 0; t < mode_prep.size(); ++t) {
      detail::resample_bins(mode_prep[t], rng, bins, scratch);
      const detail::VarianceFit fit =
          detail::fit_variance_bins(scratch, scale2, floor_sub, 2);
      moments.push_back(detail::moments_from_fit(mode_ids[t], fit));
    }
    const ReconstructedCm rec = assemble_cm(moments);
    cm_sum += rec.cm;
    cm_sum2 += rec.cm.cwiseProduct(rec.cm);

    MarkerReport rep;
    try {
      rep = classify(rec.cm);
    } catch (const std::exception&) {
      // grossly degenerate resample; skip the marker accumulation entirely
      rep = MarkerReport{};
    }
    const auto vals = rep.values();
    for (int k = 0; k < MarkerReport::kValueCount; ++k) {
      if (std::isfinite(vals[k])) {
        mk_sum[k] += vals[k];
        mk_sum2[k] += vals[k] * vals[k];
        mk_count[k]++;
      }
    }
    if (with_transmission) {
      try {
        const double t = infer_transmission(rec.cm).transmission;
        t_sum += t;
        t_sum2 += t * t;
        t_count++;
      } catch (const std::exception&) {
        out.transmission_failures++;
      }
    }
  }

  const double nr = static_cast<double>(cfg.resamples);
  out.cm_mean = cm_sum / nr;
  out.cm_sd = ((cm_sum2 / nr) - out.cm_mean.cwiseProduct(out.cm_mean))
                  .cwiseMax(0.0)
                  .cwiseSqrt() *
              std::sqrt(nr / (nr - 1.0));
  for (int k = 0; k < MarkerReport::kValueCount; ++k) {
    if (mk_count[k] >= 2) {
      const double c = static_cast<double>(mk_count[k]);
      out.marker_mean[k] = mk_sum[k] / c;
      const double var = std::max(mk_sum2[k] / c - out.marker_mean[k] * out.marker_mean[k], 0.0);
      out.marker_sd[k] = std::sqrt(var * c / (c - 1.0));
    } else {
      out.marker_mean[k] = kNaN;
      out.marker_sd[k] = kNaN;
    }
  }
  if (with_transmission && t_count >= 2) {
    const double c = static_cast<double>(t_count);
    out.transmission_mean = t_sum / c;
    const double var = std::max(t_sum2 / c - out.transmission_mean * out.transmission_mean, 0.0);
    out.transmission_sd = std::sqrt(var * c / (c - 1.0));
  }
  return out;
}

}  // namespace cvmark
