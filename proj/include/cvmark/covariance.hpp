#pragma once

// Covariance-matrix algebra for two-mode Gaussian states.
//
// Conventions used across the whole library:
//   * quadrature ordering (X1, Y1, X2, Y2),
//   * shot-noise units with vacuum quadrature variance 1/2,
//   * natural logarithms for every entropy-like quantity (nats).

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace cvmark {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

inline constexpr double kVacuumVariance = 0.5;

namespace tol {
inline constexpr double symmetry = 1e-12;  // relative, covariance symmetry
inline constexpr double physical = 1e-9;   // bona-fide margin slack
inline constexpr double radicand = 1e-9;   // clamp for square-root arguments
}  // namespace tol

/// Validates the basic covariance-matrix invariants: finite entries,
/// symmetry within relative tolerance, strictly positive diagonal.
inline void check_covariance(const Mat4& sigma) {
  if (!sigma.allFinite())
    throw std::invalid_argument("covariance: non-finite entries");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > tol::symmetry * scale)
    throw std::invalid_argument("covariance: matrix not symmetric");
  for (int i = 0; i < 4; ++i)
    if (!(sigma(i, i) > 0.0))
      throw std::invalid_argument("covariance: diagonal not strictly positive");
}

/// Standard-form covariance matrix, parameterised by the diagonal blocks
/// n*I, m*I and the cross block diag(c1, c2).
struct StandardForm {
  double n = kVacuumVariance;
  double m = kVacuumVariance;
  double c1 = 0.0;
  double c2 = 0.0;

  Mat4 embed() const {
    Mat4 s = Mat4::Zero();
    s(0, 0) = s(1, 1) = n;
    s(2, 2) = s(3, 3) = m;
    s(0, 2) = s(2, 0) = c1;
    s(1, 3) = s(3, 1) = c2;
    return s;
  }

  /// Fully symmetric ("diagonal") state predicate: n = m and c1 = -c2.
  bool diagonal(double eps = 1e-9) const {
    return std::abs(n - m) <= eps && std::abs(c1 + c2) <= eps;
  }
};

inline StandardForm make_standard_form(double n, double m, double c1, double c2) {
  if (!(std::isfinite(n) && std::isfinite(m) && std::isfinite(c1) && std::isfinite(c2)))
    throw std::invalid_argument("standard form: non-finite input");
  if (n < kVacuumVariance || m < kVacuumVariance)
    throw std::domain_error("standard form: below shot-noise diagonal");
  return StandardForm{n, m, c1, c2};
}

inline const StandardForm kVacuumState{kVacuumVariance, kVacuumVariance, 0.0, 0.0};

/// The four local symplectic invariants: determinants of the self blocks,
/// of the cross block and of the full matrix.
struct SymplecticInvariants {
  double I1 = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double I4 = 0.0;

  double delta() const { return I1 + I2 + 2.0 * I3; }
};

inline SymplecticInvariants invariants(const Mat4& sigma) {
  SymplecticInvariants inv;
  inv.I1 = sigma.block<2, 2>(0, 0).determinant();
  inv.I2 = sigma.block<2, 2>(2, 2).determinant();
  inv.I3 = sigma.block<2, 2>(0, 2).determinant();
  inv.I4 = sigma.determinant();
  return inv;
}

inline SymplecticInvariants invariants(const StandardForm& sf) {
  SymplecticInvariants inv;
  inv.I1 = sf.n * sf.n;
  inv.I2 = sf.m * sf.m;
  inv.I3 = sf.c1 * sf.c2;
  inv.I4 = (sf.n * sf.m - sf.c1 * sf.c1) * (sf.n * sf.m - sf.c2 * sf.c2);
  return inv;
}

struct SymplecticSpectrum {
  double d_plus = 0.0;
  double d_minus = 0.0;
};

/// Symplectic eigenvalues d+- = sqrt((Delta +- sqrt(Delta^2 - 4 I4)) / 2).
/// Tiny negative radicands (rounding on near-degenerate spectra) are clamped.
inline SymplecticSpectrum symplectic_spectrum(const SymplecticInvariants& inv) {
  const double delta = inv.delta();
  double rad = delta * delta - 4.0 * inv.I4;
  if (rad < -tol::radicand * std::max(1.0, delta * delta))
    throw std::domain_error("complex symplectic spectrum");
  rad = std::max(rad, 0.0);
  const double root = std::sqrt(rad);
  const double hi = std::max((delta + root) / 2.0, 0.0);
  const double lo = std::max((delta - root) / 2.0, 0.0);
  return SymplecticSpectrum{std::sqrt(hi), std::sqrt(lo)};
}

inline SymplecticSpectrum symplectic_spectrum(const Mat4& sigma) {
  return symplectic_spectrum(invariants(sigma));
}

inline SymplecticSpectrum symplectic_spectrum(const StandardForm& sf) {
  return symplectic_spectrum(invariants(sf));
}

struct BonaFide {
  bool physical = false;
  double margin = 0.0;  // 4*I4 + 1/4 - (I1 + I2 + 2*I3)
};

/// Heisenberg / bona-fide test: invariant inequality, d- >= 1/2 and
/// positive semidefiniteness of sigma itself.
inline BonaFide is_bona_fide(const Mat4& sigma, double eps = tol::physical) {
  const SymplecticInvariants inv = invariants(sigma);
  BonaFide out;
  out.margin = 4.0 * inv.I4 + 0.25 - inv.delta();
  bool ok = out.margin >= -eps;
  if (ok) {
    const double delta = inv.delta();
    const double rad = delta * delta - 4.0 * inv.I4;
    if (rad < -eps) {
      ok = false;
    } else {
      const double dmin = std::sqrt(std::max((delta - std::sqrt(std::max(rad, 0.0))) / 2.0, 0.0));
      ok = dmin >= kVacuumVariance - eps;
    }
  }
  if (ok) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(sigma, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    ok = es.eigenvalues().minCoeff() >= -eps * scale;
  }
  out.physical = ok;
  return out;
}

inline BonaFide is_bona_fide(const StandardForm& sf, double eps = tol::physical) {
  return is_bona_fide(sf.embed(), eps);
}

/// mu = 1 / (4 sqrt(det sigma)).
inline double purity(const SymplecticInvariants& inv) {
  if (!(inv.I4 > 0.0)) throw std::domain_error("purity: unphysical state (det sigma <= 0)");
  return 1.0 / (4.0 * std::sqrt(inv.I4));
}

inline double purity(const Mat4& sigma) { return purity(invariants(sigma)); }
inline double purity(const StandardForm& sf) { return purity(invariants(sf)); }

/// f(x) = (x+1/2) log(x+1/2) - (x-1/2) log(x-1/2), continuously extended
/// with f(1/2) = 0. Natural logarithm.
inline double entropy_f(double x) {
  if (!(x >= kVacuumVariance - tol::radicand))
    throw std::domain_error("entropy_f: argument below 1/2");
  const double lo = x - kVacuumVariance;
  if (lo <= 0.0) return 0.0;
  return (x + kVacuumVariance) * std::log(x + kVacuumVariance) - lo * std::log(lo);
}

/// S = f(d+) + f(d-); zero exactly for pure states.
inline double von_neumann_entropy(const SymplecticInvariants& inv) {
  const SymplecticSpectrum d = symplectic_spectrum(inv);
  return entropy_f(std::max(d.d_plus, kVacuumVariance)) +
         entropy_f(std::max(d.d_minus, kVacuumVariance));
}

inline double von_neumann_entropy(const Mat4& sigma) {
  return von_neumann_entropy(invariants(sigma));
}

inline double von_neumann_entropy(const StandardForm& sf) {
  return von_neumann_entropy(invariants(sf));
}

/// Gaussian Wigner density W(K) = exp(-K^T sigma^-1 K / 2) / (pi^2 sqrt(det sigma)).
/// With the SQL = 1/2 variance convention this prefactor integrates to 4 over
/// phase space (W/4 is the normalized sampling density).
inline double wigner_density(const Mat4& sigma, const Vec4& point) {
  Eigen::LLT<Mat4> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("wigner_density: covariance not positive definite");
  const double det = sigma.determinant();
  if (!(det > 0.0)) throw std::domain_error("wigner_density: singular covariance");
  const double quad = point.dot(llt.solve(point));
  const double pi2 = M_PI * M_PI;
  return std::exp(-0.5 * quad) / (pi2 * std::sqrt(det));
}

inline double wigner_density(const StandardForm& sf, const Vec4& point) {
  return wigner_density(sf.embed(), point);
}

/// One 2x2 symplectic (det = 1) block per subsystem.
struct LocalSymplectic {
  Mat2 s1 = Mat2::Identity();
  Mat2 s2 = Mat2::Identity();
};

inline LocalSymplectic make_local_symplectic(const Mat2& s1, const Mat2& s2) {
  const auto check = [](const Mat2& s, const char* which) {
    if (std::abs(s.determinant() - 1.0) > 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()))
      throw std::invalid_argument(std::string("local symplectic: non-unimodular block ") + which);
  };
  check(s1, "S1");
  check(s2, "S2");
  return LocalSymplectic{s1, s2};
}

inline Mat2 squeeze_block(double s) {
  if (!(s > 0.0) || !std::isfinite(s))
    throw std::invalid_argument("squeeze: parameter must be positive");
  Mat2 b;
  b << s, 0.0, 0.0, 1.0 / s;
  return b;
}

inline Mat2 rotation_block(double theta) {
  Mat2 b;
  b << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return b;
}

/// sigma' = (S1 (+) S2) sigma (S1 (+) S2)^T.
inline Mat4 apply_local_symplectic(const Mat4& sigma, const LocalSymplectic& op) {
  make_local_symplectic(op.s1, op.s2);  // enforce unimodularity
  Mat4 s = Mat4::Zero();
  s.block<2, 2>(0, 0) = op.s1;
  s.block<2, 2>(2, 2) = op.s2;
  return s * sigma * s.transpose();
}

/// Pure fully symmetric state: (n, n, c, -c) with c = sqrt(n^2 - 1/4).
inline StandardForm pure_diagonal(double n) {
  if (!(n >= kVacuumVariance))
    throw std::domain_error("pure_diagonal: n below 1/2");
  const double c = std::sqrt(std::max(n * n - 0.25, 0.0));
  return StandardForm{n, n, c, -c};
}

/// Standard-form projection of a (near) standard-form matrix plus the
/// largest off-form residual. The library does not implement the general
/// standard-form reduction; this is the documented bridge used for
/// reconstructed matrices, which are standard-form up to noise.
struct StandardFormProjection {
  StandardForm sf;
  double residual = 0.0;  // max |element| outside the standard-form pattern
};

inline StandardFormProjection project_standard_form(const Mat4& sigma) {
  StandardFormProjection out;
  out.sf.n = 0.5 * (sigma(0, 0) + sigma(1, 1));
  out.sf.m = 0.5 * (sigma(2, 2) + sigma(3, 3));
  out.sf.c1 = 0.5 * (sigma(0, 2) + sigma(2, 0));
  out.sf.c2 = 0.5 * (sigma(1, 3) + sigma(3, 1));
  double r = 0.0;
  r = std::max(r, 0.5 * std::abs(sigma(0, 0) - sigma(1, 1)));
  r = std::max(r, 0.5 * std::abs(sigma(2, 2) - sigma(3, 3)));
  r = std::max(r, std::abs(sigma(0, 1)));
  r = std::max(r, std::abs(sigma(0, 3)));
  r = std::max(r, std::abs(sigma(1, 2)));
  r = std::max(r, std::abs(sigma(2, 3)));
  out.residual = r;
  return out;
}

}  // namespace cvmark
