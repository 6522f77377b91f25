#include "cvmark/covariance.hpp"

#include "test_oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

using namespace cvmark;
using Catch::Approx;

namespace {
const StandardForm kRef = pure_diagonal(1.0);  // n = m = 1, c = sqrt(3)/2
constexpr double kC = 0.86602540378443865;
}  // namespace

TEST_CASE("standard form construction and validation") {
  const StandardForm vac = make_standard_form(0.5, 0.5, 0.0, 0.0);
  CHECK(vac.n == 0.5);
  CHECK(vac.c1 == 0.0);
  CHECK(vac.diagonal());

  const StandardForm ref = make_standard_form(1.0, 1.0, kC, -kC);
  CHECK(ref.diagonal());
  CHECK(ref.embed()(0, 2) == Approx(kC));

  CHECK_THROWS_AS(make_standard_form(0.4, 1.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(make_standard_form(1.0, 0.49, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(make_standard_form(std::nan(""), 1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("covariance validation") {
  Mat4 bad = kRef.embed();
  bad(0, 2) += 1e-6;
  CHECK_THROWS_AS(check_covariance(bad), std::invalid_argument);
  Mat4 neg = kRef.embed();
  neg(1, 1) = -0.1;
  CHECK_THROWS_AS(check_covariance(neg), std::invalid_argument);
  CHECK_NOTHROW(check_covariance(kRef.embed()));
}

TEST_CASE("symplectic invariants match independent determinants") {
  const SymplecticInvariants ref = invariants(kRef);
  CHECK(ref.I1 == Approx(1.0).margin(1e-12));
  CHECK(ref.I2 == Approx(1.0).margin(1e-12));
  CHECK(ref.I3 == Approx(-0.75).margin(1e-12));
  CHECK(ref.I4 == Approx(0.0625).margin(1e-12));
  CHECK(ref.I4 == Approx(oracle::det4(kRef.embed())).margin(1e-12));

  const SymplecticInvariants vac = invariants(kVacuumState);
  CHECK(vac.I1 == Approx(0.25).margin(1e-15));
  CHECK(vac.I3 == Approx(0.0).margin(1e-15));
  CHECK(vac.I4 == Approx(0.0625).margin(1e-15));

  const SymplecticInvariants prod = invariants(StandardForm{1.0, 2.0, 0.0, 0.0});
  CHECK(prod.I1 == Approx(1.0).margin(1e-12));
  CHECK(prod.I2 == Approx(4.0).margin(1e-12));
  CHECK(prod.I4 == Approx(4.0).margin(1e-12));

  std::mt19937_64 rng(101);
  for (int i = 0; i < 500; ++i) {
    std::uniform_real_distribution<double> un(0.5, 4.0), uc(-3.0, 3.0);
    const StandardForm sf{un(rng), un(rng), uc(rng), uc(rng)};
    const SymplecticInvariants closed = invariants(sf);
    const Mat4 s = sf.embed();
    CHECK(closed.I1 == Approx(oracle::det2(s(0, 0), s(0, 1), s(1, 0), s(1, 1))).margin(1e-12));
    CHECK(closed.I3 == Approx(oracle::det2(s(0, 2), s(0, 3), s(1, 2), s(1, 3))).margin(1e-12));
    CHECK(closed.I4 == Approx(oracle::det4(s)).margin(1e-10 * std::max(1.0, std::abs(closed.I4))));
  }
}

TEST_CASE("symplectic spectrum") {
  const SymplecticSpectrum ref = symplectic_spectrum(kRef);
  CHECK(ref.d_plus == Approx(0.5).margin(1e-12));
  CHECK(ref.d_minus == Approx(0.5).margin(1e-12));

  const SymplecticSpectrum vac = symplectic_spectrum(kVacuumState);
  CHECK(vac.d_plus == Approx(0.5).margin(1e-15));

  const SymplecticSpectrum prod = symplectic_spectrum(StandardForm{1.0, 2.0, 0.0, 0.0});
  CHECK(prod.d_plus == Approx(2.0).margin(1e-12));
  CHECK(prod.d_minus == Approx(1.0).margin(1e-12));

  SymplecticInvariants bogus;
  bogus.I1 = bogus.I2 = 0.25;
  bogus.I3 = 0.0;
  bogus.I4 = 10.0;  // radicand strongly negative
  CHECK_THROWS_AS(symplectic_spectrum(bogus), std::domain_error);
}

TEST_CASE("bona fide test against complex Heisenberg oracle") {
  const BonaFide ref = is_bona_fide(kRef);
  CHECK(ref.physical);
  CHECK(ref.margin == Approx(0.0).margin(1e-12));

  const BonaFide vac = is_bona_fide(kVacuumState);
  CHECK(vac.physical);
  CHECK(vac.margin == Approx(0.0).margin(1e-15));

  // c beyond the pure bound: unphysical, with the brute-force eigenvalue
  // check of sigma + (i/2) omega(+)omega agreeing. The invariant-inequality
  // margin alone stays positive here; the state fails through d- < 1/2.
  const StandardForm over{1.0, 1.0, 0.99, -0.99};
  const BonaFide bad = is_bona_fide(over);
  CHECK_FALSE(bad.physical);
  CHECK(symplectic_spectrum(over).d_minus < 0.5);

  // same-sign correlations overshoot the margin itself
  const StandardForm margin_bad{1.0, 1.0, 0.9 * kC, 0.9 * kC};
  CHECK_FALSE(is_bona_fide(margin_bad).physical);
  CHECK(is_bona_fide(margin_bad).margin < 0.0);

  const auto heisenberg_min_eig = [](const Mat4& s) {
    Eigen::Matrix4cd h = s.cast<std::complex<double>>();
    const std::complex<double> ih(0.0, 0.5);
    h(0, 1) += ih;
    h(1, 0) -= ih;
    h(2, 3) += ih;
    h(3, 2) -= ih;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };
  CHECK(heisenberg_min_eig(over.embed()) < -1e-6);
  CHECK(heisenberg_min_eig(kRef.embed()) > -1e-12);
  CHECK(heisenberg_min_eig(kVacuumState.embed()) > -1e-12);

  // sign agreement on random states
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> un(0.5, 3.0), uc(-2.0, 2.0);
  for (int i = 0; i < 400; ++i) {
    const StandardForm sf{un(rng), un(rng), uc(rng), uc(rng)};
    const double oracle_eig = heisenberg_min_eig(sf.embed());
    if (std::abs(oracle_eig) < 1e-7) continue;  // skip boundary states
    CHECK(is_bona_fide(sf).physical == (oracle_eig > 0.0));
  }
}

TEST_CASE("purity") {
  CHECK(purity(kRef) == Approx(1.0).margin(1e-12));
  CHECK(purity(kVacuumState) == Approx(1.0).margin(1e-15));
  const StandardForm half{0.75, 0.75, 0.43301270189221932, -0.43301270189221932};
  CHECK(purity(half) == Approx(2.0 / 3.0).margin(1e-12));
  const StandardForm sick{1.0, 1.0, 1.2, 0.0};  // I4 < 0
  CHECK_THROWS_AS(purity(sick), std::domain_error);
}

TEST_CASE("entropy function f") {
  CHECK(entropy_f(0.5) == 0.0);
  CHECK(entropy_f(1.0) == Approx(0.95477125244221923).margin(1e-14));
  CHECK(entropy_f(2.0) == Approx(1.6825291675231411).margin(1e-14));
  CHECK_THROWS_AS(entropy_f(0.4), std::domain_error);
}

TEST_CASE("von Neumann entropy") {
  CHECK(von_neumann_entropy(kRef) == Approx(0.0).margin(1e-9));
  CHECK(von_neumann_entropy(kVacuumState) == Approx(0.0).margin(1e-12));
  CHECK(von_neumann_entropy(StandardForm{1.0, 2.0, 0.0, 0.0}) ==
        Approx(2.6373004199653603).margin(1e-12));
}

TEST_CASE("wigner density point values") {
  const Vec4 zero = Vec4::Zero();
  CHECK(wigner_density(kVacuumState, zero) == Approx(0.40528473456935109).margin(1e-14));
  CHECK(wigner_density(kRef, zero) == Approx(0.40528473456935109).margin(1e-12));
  CHECK(wigner_density(kVacuumState, Vec4(1, 0, 0, 0)) ==
        Approx(0.14909592166868921).margin(1e-14));

  Mat4 singular = Mat4::Zero();
  singular(0, 0) = singular(1, 1) = singular(2, 2) = 1.0;
  CHECK_THROWS_AS(wigner_density(singular, zero), std::domain_error);
}

TEST_CASE("wigner monte carlo second moments within 5 standard errors") {
  constexpr std::size_t kN = 1000000;
  int state_idx = 0;
  for (const StandardForm& sf : {kVacuumState, kRef}) {
    const Mat4 sigma = sf.embed();
    const auto mc = oracle::sample_second_moments(sigma, kN, 4242 + state_idx++);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double se = oracle::moment_standard_error(sigma, i, j, kN);
        INFO("entry " << i << "," << j);
        CHECK(std::abs(mc.mean_outer(i, j) - sigma(i, j)) < 5.0 * se);
      }
  }
}

// The density uses the prefactor 1/(pi^2 sqrt(det sigma)); with the SQL=1/2
// variance convention its 4-D integral is (2 pi)^2 sqrt(det) / (pi^2 sqrt(det)) = 4
// for every state. The grid quadrature pins that normalization.
TEST_CASE("wigner density normalization and nonnegativity") {
  for (const StandardForm& sf : {kVacuumState, kRef}) {
    const Mat4 sigma = sf.embed();
    const Mat4 inv = sigma.inverse();
    const double norm = 1.0 / (M_PI * M_PI * std::sqrt(sigma.determinant()));
    const double h = 0.25, lim = 8.0;
    const int steps = static_cast<int>(2 * lim / h);
    double integral = 0.0;
    for (int a = 0; a < steps; ++a)
      for (int b = 0; b < steps; ++b)
        for (int c = 0; c < steps; ++c)
          for (int d = 0; d < steps; ++d) {
            const Vec4 k(-lim + (a + 0.5) * h, -lim + (b + 0.5) * h, -lim + (c + 0.5) * h,
                         -lim + (d + 0.5) * h);
            integral += norm * std::exp(-0.5 * k.dot(inv * k));
          }
    integral *= h * h * h * h;
    CHECK(integral == Approx(4.0).epsilon(0.01));
  }

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec4 k(u(rng), u(rng), u(rng), u(rng));
    CHECK(wigner_density(kRef, k) >= 0.0);
  }
}

TEST_CASE("local symplectic operations") {
  const LocalSymplectic identity;
  CHECK((apply_local_symplectic(kRef.embed(), identity) - kRef.embed()).cwiseAbs().maxCoeff() ==
        Approx(0.0).margin(1e-15));

  const double s = 1.7;
  const LocalSymplectic squeeze1{squeeze_block(s), Mat2::Identity()};
  const Mat4 squeezed = apply_local_symplectic(kVacuumState.embed(), squeeze1);
  CHECK(squeezed(0, 0) == Approx(s * s * 0.5).margin(1e-12));
  CHECK(squeezed(1, 1) == Approx(0.5 / (s * s)).margin(1e-12));
  CHECK(squeezed(2, 2) == Approx(0.5).margin(1e-15));
  CHECK(squeezed(3, 3) == Approx(0.5).margin(1e-15));

  const LocalSymplectic pi_rot{rotation_block(M_PI), rotation_block(M_PI)};
  CHECK((apply_local_symplectic(kRef.embed(), pi_rot) - kRef.embed()).cwiseAbs().maxCoeff() ==
        Approx(0.0).margin(1e-12));

  Mat2 bad;
  bad << 2.0, 0.0, 0.0, 1.0;  // det = 2
  CHECK_THROWS_AS(apply_local_symplectic(kRef.embed(), LocalSymplectic{bad, Mat2::Identity()}),
                  std::invalid_argument);
}

TEST_CASE("pure diagonal family") {
  const StandardForm vac = pure_diagonal(0.5);
  CHECK(vac.c1 == 0.0);
  CHECK(vac.n == 0.5);

  const StandardForm ref = pure_diagonal(1.0);
  CHECK(ref.c1 == Approx(kC).margin(1e-15));

  CHECK(pure_diagonal(2.5).c1 == Approx(2.4494897427831781).margin(1e-14));
  CHECK_THROWS_AS(pure_diagonal(0.49), std::domain_error);

  for (double n = 0.5; n <= 10.0; n += 0.25) {
    CHECK(purity(pure_diagonal(n)) == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("invariants and derived markers survive local symplectics") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const StandardForm sf = oracle::random_physical_state(rng);
    const Mat4 sigma = sf.embed();
    const cvmark::LocalSymplectic op = oracle::random_local_symplectic(rng);
    const Mat4 rotated = apply_local_symplectic(sigma, op);

    const SymplecticInvariants a = invariants(sigma);
    const SymplecticInvariants b = invariants(rotated);
    const double scale = std::max(1.0, std::abs(a.I4));
    CHECK(std::abs(a.I1 - b.I1) < 1e-9 * scale);
    CHECK(std::abs(a.I2 - b.I2) < 1e-9 * scale);
    CHECK(std::abs(a.I3 - b.I3) < 1e-9 * scale);
    CHECK(std::abs(a.I4 - b.I4) < 1e-9 * scale);
    CHECK(std::abs(purity(sigma) - purity(rotated)) < 1e-9);
    CHECK(std::abs(von_neumann_entropy(sigma) - von_neumann_entropy(rotated)) < 1e-8);
    const SymplecticSpectrum da = symplectic_spectrum(sigma);
    const SymplecticSpectrum db = symplectic_spectrum(rotated);
    CHECK(std::abs(da.d_plus - db.d_plus) < 1e-9 * std::max(1.0, da.d_plus));
    CHECK(std::abs(da.d_minus - db.d_minus) < 1e-9);
  }
}

TEST_CASE("standard form projection") {
  const auto exact = project_standard_form(kRef.embed());
  CHECK(exact.residual == 0.0);
  CHECK(exact.sf.n == Approx(1.0));
  CHECK(exact.sf.c1 == Approx(kC));

  Mat4 noisy = kRef.embed();
  noisy(0, 1) = noisy(1, 0) = 0.01;
  const auto proj = project_standard_form(noisy);
  CHECK(proj.residual == Approx(0.01));
}
