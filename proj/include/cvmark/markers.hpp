#pragma once

// Entanglement criteria, witnesses and information-theoretic markers for
// two-mode Gaussian states. Witness sign conventions: negative values break
// the corresponding separability bound.

#include "cvmark/covariance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace cvmark {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// PHS witness in invariant form, 4 I4 + 1/4 - (I1 + I2) - 2|I3|.
/// Negative iff entangled (necessary and sufficient for Gaussian states).
inline double w_phs(const SymplecticInvariants& inv) {
  return 4.0 * inv.I4 + 0.25 - (inv.I1 + inv.I2) - 2.0 * std::abs(inv.I3);
}

inline double w_phs(const StandardForm& sf) { return w_phs(invariants(sf)); }
inline double w_phs(const Mat4& sigma) { return w_phs(invariants(sigma)); }

/// Duan witness 2 sqrt((n-1/2)(m-1/2)) - (c1 - c2) for the standard form,
/// with the EPR-pair parameter already minimised. Negative is sufficient
/// for entanglement. The product under the root is clamped at zero so the
/// vacuum limit n = m = 1/2 extends continuously to -(c1 - c2).
inline double w_duan(const StandardForm& sf) {
  const double prod = std::max((sf.n - kVacuumVariance) * (sf.m - kVacuumVariance), 0.0);
  return 2.0 * std::sqrt(prod) - (sf.c1 - sf.c2);
}

/// Block X/Y-separable covariance matrix in the Duan canonical layout:
/// diag(n1, n2, m1, m2) with cross terms c1 (X sector) and c2 (Y sector).
struct DuanForm {
  double n1 = kVacuumVariance, n2 = kVacuumVariance;
  double m1 = kVacuumVariance, m2 = kVacuumVariance;
  double c1 = 0.0, c2 = 0.0;

  Mat4 embed() const {
    Mat4 s = Mat4::Zero();
    s(0, 0) = n1;
    s(1, 1) = n2;
    s(2, 2) = m1;
    s(3, 3) = m2;
    s(0, 2) = s(2, 0) = c1;
    s(1, 3) = s(3, 1) = c2;
    return s;
  }

  static DuanForm from_standard(const StandardForm& sf) {
    return DuanForm{sf.n, sf.n, sf.m, sf.m, sf.c1, sf.c2};
  }
};

struct DuanConditions {
  bool holds = false;
  bool degenerate = false;  // vacuum sectors, conditions vacuously true
  double a0_squared = 1.0;
  double ratio_residual = 0.0;
  double correlation_residual = 0.0;
};

/// Checks the canonical-form constraints
///   (n1-1/2)/(m1-1/2) = (n2-1/2)/(m2-1/2)
///   |c1| - |c2| = sqrt((n1-1/2)(m1-1/2)) - sqrt((n2-1/2)(m2-1/2))
/// and reports the minimising EPR-pair parameter a0^2 = sqrt((m1-1/2)/(n1-1/2)).
inline DuanConditions duan_form_conditions(const DuanForm& d, double eps = 1e-6) {
  DuanConditions out;
  const double en1 = d.n1 - kVacuumVariance, en2 = d.n2 - kVacuumVariance;
  const double em1 = d.m1 - kVacuumVariance, em2 = d.m2 - kVacuumVariance;
  if (std::min({en1, en2, em1, em2}) < -eps)
    throw std::domain_error("duan form: sector variance below shot noise");
  if (en1 < eps && en2 < eps && em1 < eps && em2 < eps) {
    out.holds = true;
    out.degenerate = true;
    out.a0_squared = 1.0;
    return out;
  }
  if (em1 < eps || em2 < eps || en1 < eps || en2 < eps) {
    // One sector at the vacuum floor while others are not: the ratio
    // condition cannot be evaluated.
    out.holds = false;
    out.degenerate = true;
    out.ratio_residual = std::numeric_limits<double>::infinity();
    return out;
  }
  out.ratio_residual = en1 / em1 - en2 / em2;
  out.correlation_residual =
      (std::abs(d.c1) - std::abs(d.c2)) - (std::sqrt(en1 * em1) - std::sqrt(en2 * em2));
  out.a0_squared = std::sqrt((em1 + em2) / (en1 + en2));
  out.holds = std::abs(out.ratio_residual) <= eps && std::abs(out.correlation_residual) <= eps;
  return out;
}

/// Necessary-and-sufficient Duan criterion on a canonical-form matrix:
///   a0^2 (n1+n2-1) + (m1+m2-1)/a0^2 - 2(|c1| + |c2|),
/// negative iff entangled. The correlation term uses |c1| + |c2|: the
/// EPR-pair signs are chosen per sector to minimise the total variance,
/// which subtracts both cross correlations.
inline double duan_necessary(const DuanForm& d, double eps = 1e-6) {
  const DuanConditions cond = duan_form_conditions(d, eps);
  if (!cond.holds) throw std::domain_error("duan criterion: not in canonical Duan form");
  const double a2 = cond.a0_squared;
  return a2 * (d.n1 + d.n2 - 1.0) + (d.m1 + d.m2 - 1.0) / a2 -
         2.0 * (std::abs(d.c1) + std::abs(d.c2));
}

enum class Subsystem { one = 1, two = 2 };

/// EPR-Reid witness. Direction one_to_two infers subsystem 1 from
/// measurements on 2 (n^2 prefactor); the reversed direction swaps the
/// roles. In invariant form the two directions read I4/I2 - 1/4 and
/// I4/I1 - 1/4. Negative values certify steering-type correlation.
inline double w_epr(const SymplecticInvariants& inv, Subsystem inferred) {
  const double block = (inferred == Subsystem::one) ? inv.I2 : inv.I1;
  if (!(block > 0.0)) throw std::domain_error("epr witness: degenerate self block");
  return inv.I4 / block - 0.25;
}

inline double w_epr(const StandardForm& sf, Subsystem inferred) {
  return w_epr(invariants(sf), inferred);
}

/// Coherent-state teleportation fidelity for a standard-form resource:
/// F = [(1 + m + n - 2 c1)(1 + m + n + 2 c2)]^(-1/2).
inline double fidelity(const StandardForm& sf) {
  const double a = 1.0 + sf.m + sf.n - 2.0 * sf.c1;
  const double b = 1.0 + sf.m + sf.n + 2.0 * sf.c2;
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("fidelity: non-positive radicand (unphysical input)");
  return 1.0 / std::sqrt(a * b);
}

/// Fidelity for a general covariance matrix. The added-noise matrix of the
/// unit-gain protocol is A = alpha + beta - gamma Z - (gamma Z)^T with
/// Z = diag(1, -1); F = det(I + A)^(-1/2). Reduces to the standard-form
/// expression when the matrix is in standard form. Not invariant under
/// local symplectic operations.
inline double fidelity(const Mat4& sigma) {
  const Mat2 alpha = sigma.block<2, 2>(0, 0);
  const Mat2 beta = sigma.block<2, 2>(2, 2);
  const Mat2 gamma = sigma.block<2, 2>(0, 2);
  Mat2 z;
  z << 1.0, 0.0, 0.0, -1.0;
  const Mat2 gz = gamma * z;
  const Mat2 a = alpha + beta - gz - gz.transpose();
  const double det = (Mat2::Identity() + a).determinant();
  if (!(det > 0.0))
    throw std::domain_error("fidelity: non-positive radicand (unphysical input)");
  return 1.0 / std::sqrt(det);
}

/// Mutual information I = f(n) + f(m) - f(d+) - f(d-); n and m enter as the
/// invariant block determinants sqrt(I1), sqrt(I2).
inline double mutual_information(const SymplecticInvariants& inv) {
  const SymplecticSpectrum d = symplectic_spectrum(inv);
  const double n = std::sqrt(std::max(inv.I1, 0.25));
  const double m = std::sqrt(std::max(inv.I2, 0.25));
  return entropy_f(n) + entropy_f(m) - entropy_f(std::max(d.d_plus, kVacuumVariance)) -
         entropy_f(std::max(d.d_minus, kVacuumVariance));
}

inline double mutual_information(const StandardForm& sf) {
  return mutual_information(invariants(sf));
}

/// Gaussian quantum discord. measured = two is the printed orientation
///   D = f(m) - f(d+) - f(d-) + f((n + 2nm + 2 c1 c2)/(1 + 2m));
/// measured = one swaps the roles of n and m.
inline double discord(const SymplecticInvariants& inv, Subsystem measured) {
  const SymplecticSpectrum d = symplectic_spectrum(inv);
  const double n = std::sqrt(std::max(inv.I1, 0.25));
  const double m = std::sqrt(std::max(inv.I2, 0.25));
  const double self = (measured == Subsystem::two) ? m : n;
  const double other = (measured == Subsystem::two) ? n : m;
  const double inner = (other + 2.0 * n * m + 2.0 * inv.I3) / (1.0 + 2.0 * self);
  if (inner < kVacuumVariance - tol::radicand)
    throw std::domain_error("discord: conditional argument below 1/2 (unphysical input)");
  return entropy_f(self) - entropy_f(std::max(d.d_plus, kVacuumVariance)) -
         entropy_f(std::max(d.d_minus, kVacuumVariance)) +
         entropy_f(std::max(inner, kVacuumVariance));
}

inline double discord(const StandardForm& sf, Subsystem measured) {
  return discord(invariants(sf), measured);
}

/// All scalar markers and criterion flags for one state.
struct MarkerReport {
  double mu = kNaN;
  double entropy = kNaN;
  double w_phs = kNaN;
  double w_duan = kNaN;
  double w_epr_1to2 = kNaN;
  double w_epr_2to1 = kNaN;
  double fidelity = kNaN;
  double mutual_info = kNaN;
  double discord_meas2 = kNaN;
  double discord_meas1 = kNaN;
  double d_plus = kNaN;
  double d_minus = kNaN;
  double I1 = kNaN, I2 = kNaN, I3 = kNaN, I4 = kNaN;

  bool physical = false;
  bool entangled_phs = false;
  bool duan_sufficient = false;
  bool epr_1to2 = false;
  bool epr_2to1 = false;
  bool fidelity_quantum = false;

  static constexpr int kValueCount = 16;
  static constexpr std::array<const char*, kValueCount> value_names() {
    return {"mu",       "entropy",       "w_phs",         "w_duan",
            "w_epr_1to2", "w_epr_2to1",  "fidelity",      "mutual_info",
            "discord_meas2", "discord_meas1", "d_plus",    "d_minus",
            "I1",       "I2",            "I3",            "I4"};
  }
  std::array<double, kValueCount> values() const {
    return {mu,       entropy,       w_phs,         w_duan,
            w_epr_1to2, w_epr_2to1,  fidelity,      mutual_info,
            discord_meas2, discord_meas1, d_plus,    d_minus,
            I1,       I2,            I3,            I4};
  }
  void set_values(const std::array<double, kValueCount>& v) {
    mu = v[0]; entropy = v[1]; w_phs = v[2]; w_duan = v[3];
    w_epr_1to2 = v[4]; w_epr_2to1 = v[5]; fidelity = v[6]; mutual_info = v[7];
    discord_meas2 = v[8]; discord_meas1 = v[9]; d_plus = v[10]; d_minus = v[11];
    I1 = v[12]; I2 = v[13]; I3 = v[14]; I4 = v[15];
  }
  static constexpr std::array<const char*, 6> flag_names() {
    return {"physical", "entangled_phs", "duan_sufficient",
            "epr_1to2", "epr_2to1",      "fidelity_quantum"};
  }
  std::array<bool, 6> flags() const {
    return {physical, entangled_phs, duan_sufficient, epr_1to2, epr_2to1, fidelity_quantum};
  }
};

namespace detail {

// Shared classification core. Witnesses are always evaluated; markers whose
// formulas break down on grossly unphysical matrices are reported as NaN
// instead of failing, so region-VI states remain plottable.
inline MarkerReport classify_impl(const SymplecticInvariants& inv, const StandardForm& elements,
                                  const BonaFide& bona, std::optional<double> general_fidelity) {
  MarkerReport r;
  r.I1 = inv.I1;
  r.I2 = inv.I2;
  r.I3 = inv.I3;
  r.I4 = inv.I4;
  r.physical = bona.physical;

  r.w_phs = w_phs(inv);
  r.w_duan = w_duan(elements);
  try {
    r.w_epr_1to2 = w_epr(inv, Subsystem::one);
    r.w_epr_2to1 = w_epr(inv, Subsystem::two);
  } catch (const std::domain_error&) {
  }
  try {
    r.fidelity = general_fidelity ? *general_fidelity : fidelity(elements);
  } catch (const std::domain_error&) {
  }
  try {
    const SymplecticSpectrum d = symplectic_spectrum(inv);
    r.d_plus = d.d_plus;
    r.d_minus = d.d_minus;
    r.entropy = von_neumann_entropy(inv);
    r.mutual_info = mutual_information(inv);
  } catch (const std::domain_error&) {
  }
  try {
    r.mu = purity(inv);
  } catch (const std::domain_error&) {
  }
  try {
    r.discord_meas2 = discord(inv, Subsystem::two);
    r.discord_meas1 = discord(inv, Subsystem::one);
  } catch (const std::domain_error&) {
  }

  r.entangled_phs = r.w_phs < 0.0;
  r.duan_sufficient = r.w_duan < 0.0;
  r.epr_1to2 = r.w_epr_1to2 < 0.0;
  r.epr_2to1 = r.w_epr_2to1 < 0.0;
  r.fidelity_quantum = r.fidelity > 0.5;
  return r;
}

}  // namespace detail

inline MarkerReport classify(const StandardForm& sf) {
  return detail::classify_impl(invariants(sf), sf, is_bona_fide(sf), std::nullopt);
}

/// Classification of a full covariance matrix. Invariant-based markers are
/// exact for any input; w_duan uses the standard-form projection of the
/// elements and the fidelity is evaluated with the general formula.
inline MarkerReport classify(const Mat4& sigma) {
  check_covariance(sigma);
  const StandardFormProjection proj = project_standard_form(sigma);
  std::optional<double> fid;
  try {
    fid = fidelity(sigma);
  } catch (const std::domain_error&) {
    fid = kNaN;
  }
  return detail::classify_impl(invariants(sigma), proj.sf, is_bona_fide(sigma), fid);
}

/// Witness taxonomy of the balanced-state region plot.
enum class Region { I = 1, II = 2, III = 3, IV = 4, V = 5, VI = 6 };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IV: return "IV";
    case Region::V: return "V";
    case Region::VI: return "VI";
  }
  return "?";
}

/// Region label for a balanced state (m = n) with correlations given as
/// fractions of c_max = sqrt(n^2 - 1/4). Boundary ties within eps resolve
/// to the weaker (larger-index) region.
inline Region classify_region(double n, double c1_tilde, double c2_tilde,
                              double eps = tol::physical) {
  if (!(n >= kVacuumVariance)) throw std::domain_error("classify_region: n below 1/2");
  if (std::abs(c1_tilde) > 1.0 || std::abs(c2_tilde) > 1.0)
    throw std::domain_error("classify_region: normalized correlation outside [-1, 1]");
  const double cmax = std::sqrt(std::max(n * n - 0.25, 0.0));
  const StandardForm sf{n, n, c1_tilde * cmax, c2_tilde * cmax};
  if (!is_bona_fide(sf).physical) return Region::VI;
  const SymplecticInvariants inv = invariants(sf);
  if (w_epr(inv, Subsystem::one) < -eps) return Region::I;  // balanced: directions coincide
  if (w_duan(sf) < -eps) return Region::II;
  if (w_phs(inv) < -eps) return fidelity(sf) > 0.5 + eps ? Region::III : Region::IV;
  return Region::V;
}

/// Result of the local-squeezing canonicalisation.
struct UnveilResult {
  DuanForm canonical;
  LocalSymplectic op;        // diag(s1, 1/s1) (+) diag(s2, 1/s2)
  double s1 = 1.0, s2 = 1.0;
  double residual = 0.0;     // canonical-condition residual of the output
};

namespace detail {

inline DuanForm squeeze_duan(const DuanForm& d, double s1, double s2) {
  DuanForm t;
  t.n1 = s1 * s1 * d.n1;
  t.n2 = d.n2 / (s1 * s1);
  t.m1 = s2 * s2 * d.m1;
  t.m2 = d.m2 / (s2 * s2);
  t.c1 = d.c1 * s1 * s2;
  t.c2 = d.c2 / (s1 * s2);
  return t;
}

// Ratio-condition residual; strictly decreasing in s2^2 inside the window
// where every sector stays above the vacuum floor.
inline double duan_ratio_residual(const DuanForm& d, double s1, double s2) {
  const DuanForm t = squeeze_duan(d, s1, s2);
  return (t.n1 - kVacuumVariance) * (t.m2 - kVacuumVariance) -
         (t.n2 - kVacuumVariance) * (t.m1 - kVacuumVariance);
}

inline double duan_correlation_residual(const DuanForm& t) {
  const double en1 = t.n1 - kVacuumVariance, en2 = t.n2 - kVacuumVariance;
  const double em1 = t.m1 - kVacuumVariance, em2 = t.m2 - kVacuumVariance;
  return (std::abs(t.c1) - std::abs(t.c2)) -
         (std::sqrt(std::max(en1 * em1, 0.0)) - std::sqrt(std::max(en2 * em2, 0.0)));
}

// For fixed s1, solve the ratio condition for s2 by bisection on v = s2^2.
// Returns nullopt when the bracket degenerates (sectors at the vacuum floor).
inline std::optional<double> solve_ratio_for_s2(const DuanForm& d, double s1) {
  const double a = s1 * s1 * d.n1;
  const double b = d.n2 / (s1 * s1);
  if (a <= kVacuumVariance + 1e-12 || b <= kVacuumVariance + 1e-12) return std::nullopt;
  double lo = (kVacuumVariance / d.m1) * (1.0 + 1e-9);
  double hi = (d.m2 / kVacuumVariance) * (1.0 - 1e-9);
  if (!(lo < hi)) return std::nullopt;
  const auto res = [&](double v) { return duan_ratio_residual(d, s1, std::sqrt(v)); };
  double flo = res(lo), fhi = res(hi);
  if (flo * fhi > 0.0) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = res(mid);
    if (flo * fm <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return std::sqrt(0.5 * (lo + hi));
}

}  // namespace detail

/// Finds per-mode squeezings diag(s, 1/s) bringing a block X/Y-separable
/// matrix into the canonical Duan form. The ratio condition is solved
/// exactly for s2 at each trial s1 (it is monotone there) and the remaining
/// correlation condition is bracketed on log s1.
inline UnveilResult unveil_by_local_squeezing(const DuanForm& d, double eps = 1e-6) {
  const auto corr = [&](double ls1) -> std::optional<std::array<double, 3>> {
    const double s1 = std::exp(ls1);
    const auto s2 = detail::solve_ratio_for_s2(d, s1);
    if (!s2) return std::nullopt;
    const DuanForm t = detail::squeeze_duan(d, s1, *s2);
    return std::array<double, 3>{detail::duan_correlation_residual(t), s1, *s2};
  };

  // Scan for a sign change of the correlation residual, then bisect.
  constexpr int kScan = 481;
  constexpr double kRange = 1.5;  // log-squeeze bracket, ~4.5 in amplitude
  std::optional<std::array<double, 3>> prev;
  double prev_ls = 0.0;
  double best_abs = std::numeric_limits<double>::infinity();
  std::array<double, 3> best{};
  bool bracketed = false;
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < kScan; ++i) {
    const double ls = -kRange + 2.0 * kRange * i / (kScan - 1);
    const auto cur = corr(ls);
    if (!cur) {
      prev.reset();
      continue;
    }
    if (std::abs((*cur)[0]) < best_abs) {
      best_abs = std::abs((*cur)[0]);
      best = *cur;
    }
    if (prev && (*prev)[0] * (*cur)[0] <= 0.0) {
      lo = prev_ls;
      hi = ls;
      bracketed = true;
      break;
    }
    prev = cur;
    prev_ls = ls;
  }
  if (bracketed) {
    double flo = (*corr(lo))[0];
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto cm = corr(mid);
      if (!cm) break;
      if (flo * (*cm)[0] <= 0.0) {
        hi = mid;
      } else {
        lo = mid;
        flo = (*cm)[0];
      }
    }
    best = *corr(0.5 * (lo + hi));
    best_abs = std::abs(best[0]);
  }

  UnveilResult out;
  out.s1 = best[1];
  out.s2 = best[2];
  out.canonical = detail::squeeze_duan(d, out.s1, out.s2);
  const DuanConditions cond = duan_form_conditions(out.canonical, eps);
  out.residual = std::max(std::abs(cond.ratio_residual), std::abs(cond.correlation_residual));
  out.op = LocalSymplectic{squeeze_block(out.s1), squeeze_block(out.s2)};
  if (!cond.holds)
    throw std::runtime_error("unveil: squeezing search failed, residual " +
                             std::to_string(out.residual));
  return out;
}

inline UnveilResult unveil_by_local_squeezing(const StandardForm& sf, double eps = 1e-6) {
  return unveil_by_local_squeezing(DuanForm::from_standard(sf), eps);
}

}  // namespace cvmark
