#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fuyau/forms.hpp"
#include "fuyau/modes.hpp"

using namespace fuyau;

namespace {

HermitianField uniform(const GridSpec& g, Herm2 value) { return constant_hermitian(g, value); }

RealField cos_x1(const GridSpec& g) {
  return generate(g, [](double x1, double, double, double) { return std::cos(x1); });
}

// Direct product-rule oracle for -i ddbar(e^{-w} rho) through i_ddbar_form.
RealField minus_ddbar_direct(const HermitianField& rho, const RealField& w) {
  return -i_ddbar_form(scale(exp(-w), rho));
}

double sup_diff(const RealField& a, const RealField& b) { return sup_abs(a - b); }

// Test functions whose exponentials are resolved to roundoff on n = 16.
template <class Rng>
RealField resolved_w(const GridSpec& g, Rng& rng) {
  return random_smooth_field(g, rng, 3, 1, 0.2);
}

double reconstruction_error(const HermitianField& rho, const RealField& w) {
  return sup_diff(dealiased(reconstruct_minus_ddbar(decompose_rho(rho), w)),
                  dealiased(minus_ddbar_direct(rho, w)));
}

}  // namespace

TEST(WedgeQuotient, Examples) {
  const auto g = build_grid(8);
  EXPECT_DOUBLE_EQ(sup_abs(wedge_quotient(uniform(g, Herm2::identity()), uniform(g, Herm2::identity())) - 2.0), 0.0);
  EXPECT_DOUBLE_EQ(wedge_quotient(Herm2{3.0, 0.0, 0.0}, Herm2{0.0, 5.0, 0.0}), 15.0);
  const Herm2 off{0.0, 0.0, cplx(1.0, 2.0)};
  EXPECT_DOUBLE_EQ(wedge_quotient(off, off), -10.0);
}

TEST(Sigma2Hat, Examples) {
  EXPECT_DOUBLE_EQ(Herm2::identity().det(), 1.0);
  EXPECT_DOUBLE_EQ(Herm2{}.det(), 0.0);
  EXPECT_DOUBLE_EQ((Herm2{2.0, 3.0, cplx(0.0, 1.0)}).det(), 5.0);
}

TEST(WedgeQuotient, PolarizationAndHomogeneity) {
  std::mt19937 rng(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const Herm2 a{nd(rng), nd(rng), cplx(nd(rng), nd(rng))};
    const Herm2 b{nd(rng), nd(rng), cplx(nd(rng), nd(rng))};
    const double c = nd(rng);
    EXPECT_NEAR(wedge_quotient(a, b), wedge_quotient(b, a), 1e-14);
    EXPECT_NEAR(wedge_quotient(a, a), 2.0 * a.det(), 1e-12);
    EXPECT_NEAR((c * a).det(), c * c * a.det(), 1e-11);
    EXPECT_NEAR(wedge_quotient(a, b), contract(a.adjugate(), b), 1e-12);
  }
}

TEST(HermitianField, MinEigenvalueScan) {
  const auto g = build_grid(8);
  EXPECT_DOUBLE_EQ(min_eigenvalue(uniform(g, Herm2::identity())), 1.0);
  const auto [lo, hi] = (Herm2{1.0, 1.0, cplx(0.3, 0.0)}).eigenvalues();
  EXPECT_NEAR(lo, 0.7, 1e-15);
  EXPECT_NEAR(hi, 1.3, 1e-15);
}

TEST(IDdbarScalar, TraceIdentity) {
  const auto g = build_grid(8);
  std::mt19937 rng(5);
  const auto u = random_smooth_field(g, rng, 5, 3, 1.0);
  const auto h = i_ddbar_scalar(u);
  const auto lap = from_spectral_real(apply_multiplier(
      to_spectral(u), [n = g.n](const auto& k) { return trace_laplacian_symbol(k, n); }));
  EXPECT_LT(sup_diff(wedge_quotient(h, uniform(g, Herm2::identity())), lap), 1e-12);

  const auto hc = i_ddbar_scalar(cos_x1(g));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double c = std::cos(g.coordinate(g.unflat(i)[0]));
    EXPECT_NEAR(hc[i].a11, -0.25 * c, 1e-14);
    EXPECT_NEAR(hc[i].a22, 0.0, 1e-14);
  }
}

TEST(IDdbarScalar, ProductOfModesMatchesAnalyticOracle) {
  // u = cos x1 cos y2: d_{z1} = (d_x1 - i d_y1)/2 and so on.
  const auto g = build_grid(8);
  const auto u = generate(g, [](double x1, double, double, double y2) { return std::cos(x1) * std::cos(y2); });
  const auto h = i_ddbar_scalar(u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto m = g.unflat(i);
    const double x1 = g.coordinate(m[0]), y2 = g.coordinate(m[3]);
    // H_11 = (1/4) Lap_{x1,y1} u,  H_22 = (1/4) Lap_{x2,y2} u.
    EXPECT_NEAR(h[i].a11, -0.25 * std::cos(x1) * std::cos(y2), 1e-13);
    EXPECT_NEAR(h[i].a22, -0.25 * std::cos(x1) * std::cos(y2), 1e-13);
    // H_{1bar 2} = d_{z2} d_{zbar1} u = (1/4)(d_x1 + i d_y1)(d_x2 - i d_y2) u
    //            = (1/4)(-i) d_x1 d_y2 u = (-i/4) sin x1 sin y2.
    const cplx expected(0.0, -0.25 * std::sin(x1) * std::sin(y2));
    EXPECT_NEAR(std::abs(h[i].a12 - expected), 0.0, 1e-13);
  }
}

TEST(IDdbarForm, TraceFormAndConstants) {
  const auto g = build_grid(8);
  std::mt19937 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_smooth_field(g, rng, 4, 3, 1.0);
    const auto lhs = i_ddbar_form(scale(f, uniform(g, Herm2::identity())));
    const auto rhs = wedge_quotient(i_ddbar_scalar(f), uniform(g, Herm2::identity()));
    EXPECT_LT(sup_diff(lhs, rhs), 1e-12);
  }
  EXPECT_LT(sup_abs(i_ddbar_form(uniform(g, Herm2{2.0, -1.0, cplx(0.5, 0.25)}))), 1e-14);
}

TEST(IDdbarForm, ClosedFormsAreAnnihilated) {
  // i ddbar (i ddbar f) = 0.
  const auto g = build_grid(8);
  std::mt19937 rng(13);
  const auto f = random_smooth_field(g, rng, 5, 3, 1.0);
  EXPECT_LT(sup_abs(i_ddbar_form(i_ddbar_scalar(f))), 1e-12);
}

TEST(IDdbarForm, AdjointAgainstScalars) {
  // Integration by parts: mean(f i ddbar S) = mean(wedge_quotient(i ddbar f, S)).
  const auto g = build_grid(8);
  std::mt19937 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_smooth_field(g, rng, 4, 3, 1.0);
    const auto s = random_hermitian_field(g, rng, 4, 3, 1.0);
    const double lhs = mean(f * i_ddbar_form(s));
    const double rhs = mean(wedge_quotient(i_ddbar_scalar(f), s));
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(IDdbarForm, StokesExactness) {
  const auto g = build_grid(8);
  std::mt19937 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_hermitian_field(g, rng, 6, 4, 2.0);
    EXPECT_LT(std::abs(mean(i_ddbar_form(s))), 1e-13);
  }
}

TEST(DecomposeRho, IdentityAndZero) {
  const auto g = build_grid(8);
  const auto d = decompose_rho(uniform(g, Herm2::identity()));
  EXPECT_LT(sup_abs(d.psi_rho), 1e-15);
  for (const auto& b : d.b_rho)
    for (cplx v : b) EXPECT_LT(std::abs(v), 1e-15);
  std::mt19937 rng(2);
  const auto h = i_ddbar_scalar(random_smooth_field(g, rng, 4, 3, 1.0));
  // rho_tilde pairing against i ddbar w equals the trace when rho is the identity.
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(contract(d.rho_tilde[i], h[i]), h[i].trace(), 1e-14);

  const auto z = decompose_rho(uniform(g, Herm2{}));
  EXPECT_EQ(sup_abs(z.psi_rho), 0.0);
  EXPECT_EQ(sup_distance(z.rho_tilde, uniform(g, Herm2{})), 0.0);
}

TEST(DecomposeRho, ReconstructionSingleModes) {
  const auto g = build_grid(16, true);
  std::mt19937 rng(31);
  const std::vector<std::vector<RhoMode>> cases = {
      {{1, 2, {1, 0, 1, 0}, 1.0, 0.0}},
      {{1, 1, {0, 1, 0, 0}, 0.7, 0.2}},
      {{2, 2, {1, 0, 0, 1}, -0.5, 0.0}, {2, 1, {0, 0, 1, 1}, 0.3, -0.4}},
  };
  for (const auto& modes : cases) {
    const auto rho = rho_from_modes(g, modes);
    for (int trial = 0; trial < 5; ++trial) EXPECT_LT(reconstruction_error(rho, resolved_w(g, rng)), 1e-10);
  }
}

TEST(DecomposeRho, ReconstructionRandomPairs) {
  const auto g = build_grid(16, true);
  std::mt19937 rng(37);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rho = random_hermitian_field(g, rng, 3, 2, 0.5);
    EXPECT_LT(reconstruction_error(rho, resolved_w(g, rng)), 1e-10);
  }
}

TEST(NormalizeMu, Examples) {
  const auto g = build_grid(8);
  const auto c = cos_x1(g);
  EXPECT_LT(sup_diff(normalize_mu(c).mu_tilde, c), 1e-15);
  EXPECT_LT(sup_abs(normalize_mu(RealField(g, 3.0)).mu_tilde), 1e-15);
  const auto c2 = generate(g, [](double, double, double x2, double) { return std::cos(x2); });
  const auto raw = generate(g, [](double, double, double x2, double) { return 1.0 + std::cos(x2); });
  const auto mt = normalize_mu(raw).mu_tilde;
  EXPECT_LT(sup_diff(mt, c2), 1e-14);
  EXPECT_LT(std::abs(mean(mt)), 1e-16);
}
