#pragma once

// Test-only oracles, kept independent of the library code paths they check:
// cofactor-expansion determinants, a hand-rolled Cholesky Monte-Carlo
// sampler, random state generators and a golden-section line search.

#include "cvmark/covariance.hpp"
#include "cvmark/markers.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using cvmark::Mat4;
using cvmark::StandardForm;

// Determinant by cofactor expansion along the first row; no linear algebra
// library involved.
inline double det2(double a, double b, double c, double d) { return a * d - b * c; }

inline double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * det2(m[1][1], m[1][2], m[2][1], m[2][2]) -
         m[0][1] * det2(m[1][0], m[1][2], m[2][0], m[2][2]) +
         m[0][2] * det2(m[1][0], m[1][1], m[2][0], m[2][1]);
}

inline double det4(const Mat4& m) {
  double sum = 0.0;
  for (int col = 0; col < 4; ++col) {
    std::array<std::array<double, 3>, 3> minor{};
    for (int i = 1; i < 4; ++i) {
      int jj = 0;
      for (int j = 0; j < 4; ++j) {
        if (j == col) continue;
        minor[i - 1][jj++] = m(i, j);
      }
    }
    sum += ((col % 2 == 0) ? 1.0 : -1.0) * m(0, col) * det3(minor);
  }
  return sum;
}

// Lower-triangular Cholesky factor, hand rolled.
inline Mat4 cholesky(const Mat4& s) {
  Mat4 l = Mat4::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = s(i, j);
      for (int k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j)
        l(i, i) = std::sqrt(sum);
      else
        l(i, j) = sum / l(j, j);
    }
  }
  return l;
}

struct SecondMoments {
  Mat4 mean_outer = Mat4::Zero();  // empirical second-moment matrix
  std::size_t samples = 0;
};

// Draw `count` samples from N(0, sigma) and accumulate second moments.
inline SecondMoments sample_second_moments(const Mat4& sigma, std::size_t count,
                                           std::uint64_t seed) {
  const Mat4 l = cholesky(sigma);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  SecondMoments out;
  out.samples = count;
  for (std::size_t s = 0; s < count; ++s) {
    double z[4], k[4];
    for (double& zi : z) zi = unit(rng);
    for (int i = 0; i < 4; ++i) {
      k[i] = 0.0;
      for (int j = 0; j <= i; ++j) k[i] += l(i, j) * z[j];
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out.mean_outer(i, j) += k[i] * k[j];
  }
  out.mean_outer /= static_cast<double>(count);
  return out;
}

// Standard error of an empirical covariance entry of a Gaussian sample.
inline double moment_standard_error(const Mat4& sigma, int i, int j, std::size_t n) {
  return std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) /
                   static_cast<double>(n));
}

// Random physical standard-form states by rejection on the bona-fide test.
inline StandardForm random_physical_state(std::mt19937_64& rng, double max_n = 3.0) {
  std::uniform_real_distribution<double> un(0.5, max_n);
  for (;;) {
    const double n = un(rng), m = un(rng);
    const double lim = std::sqrt(n * m);
    std::uniform_real_distribution<double> uc(-lim, lim);
    const StandardForm sf{n, m, uc(rng), uc(rng)};
    if (cvmark::is_bona_fide(sf).physical) return sf;
  }
}

inline StandardForm random_entangled_state(std::mt19937_64& rng, double max_n = 3.0) {
  for (;;) {
    const StandardForm sf = random_physical_state(rng, max_n);
    if (cvmark::w_phs(sf) < 0.0) return sf;
  }
}

// Random mixed (or pure) diagonal entangled state: the symmetric class the
// source emits, c in (n - 1/2, c_max].
inline StandardForm random_diagonal_entangled(std::mt19937_64& rng, double max_n = 3.0) {
  std::uniform_real_distribution<double> un(0.55, max_n);
  const double n = un(rng);
  const double cmax = std::sqrt(n * n - 0.25);
  std::uniform_real_distribution<double> uc(n - 0.5, cmax);
  double c = uc(rng);
  if (c <= n - 0.5) c = 0.5 * ((n - 0.5) + cmax);
  return StandardForm{n, n, c, -c};
}

// Random local symplectic: rotation * squeeze * rotation per mode.
inline cvmark::LocalSymplectic random_local_symplectic(std::mt19937_64& rng,
                                                       double max_log_squeeze = 0.7) {
  std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> usq(-max_log_squeeze, max_log_squeeze);
  const auto block = [&]() -> cvmark::Mat2 {
    return cvmark::rotation_block(uang(rng)) * cvmark::squeeze_block(std::exp(usq(rng))) *
           cvmark::rotation_block(uang(rng));
  };
  return cvmark::LocalSymplectic{block(), block()};
}

// Golden-section minimisation of a unimodal scalar function.
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             int iters = 120) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace oracle
