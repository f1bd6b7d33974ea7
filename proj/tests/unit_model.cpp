#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "isac/model.hpp"
#include "support.hpp"

#include <random>

using namespace isac;

TEST_CASE("mix_seed is deterministic and argument-sensitive") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != 0);
  CHECK(mix_seed(401, 0) != mix_seed(401, 1));
}

TEST_CASE("hermitian_eig reconstructs and orders the spectrum") {
  std::mt19937_64 rng(11);
  const CMat m = testutil::random_psd(rng, 8);
  const EigCache e = hermitian_eig(m, "psd8");
  CHECK(e.dim() == 8);
  CHECK(e.reconstruction_error(m) <= 1e-9);
  CHECK((e.q.adjoint() * e.q - CMat::Identity(8, 8)).norm() <= 1e-10);
  for (Index i = 1; i < e.dim(); ++i) CHECK(e.a[i] >= e.a[i - 1]);
  CHECK(e.a.minCoeff() >= 0.0);

  CMat diag = CMat::Zero(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 1.0;
  const EigCache d = hermitian_eig(diag);
  CHECK(d.a[0] == doctest::Approx(1.0));
  CHECK(d.a[1] == doctest::Approx(2.0));

  const EigCache ident = hermitian_eig(CMat::Identity(3, 3));
  CHECK(ident.a.minCoeff() == doctest::Approx(1.0));
  CHECK(ident.reconstruction_error(CMat::Identity(3, 3)) <= 1e-12);
}

TEST_CASE("hermitian_eig rejects bad input") {
  CMat skew(2, 2);
  skew << Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(1, 0);
  CHECK_THROWS_AS(hermitian_eig(skew), std::domain_error);
  const CMat neg = -CMat::Identity(2, 2);
  CHECK_THROWS_AS(hermitian_eig(neg), std::domain_error);
}

TEST_CASE("max generalized eigenvalue on a diagonal pair") {
  CMat a = CMat::Zero(2, 2);
  a(0, 0) = 3.0;
  const CMat b = 2.0 * CMat::Identity(2, 2);
  CHECK(max_generalized_eigenvalue(a, b) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("shipped scenarios validate") {
  CHECK_NOTHROW(desk_scenario().validate());
  CHECK_NOTHROW(mini_scenario().validate());
}

TEST_CASE("scenario validation rejects inconsistent fields") {
  auto rejects = [](auto&& mutate) {
    Scenario sc = mini_scenario();
    mutate(sc);
    CHECK_THROWS_AS(sc.validate(), ConfigError);
  };
  rejects([](Scenario& s) { s.epsilon = 1.0; });
  rejects([](Scenario& s) { s.epsilon = -0.1; });
  rejects([](Scenario& s) { s.ncp = s.ns; });
  rejects([](Scenario& s) { s.gamma_u = 0.0; });
  rejects([](Scenario& s) { s.sigma2 = 0.0; });
  rejects([](Scenario& s) { s.channels.pop_back(); });
  rejects([](Scenario& s) { s.channels[0].setZero(); });
  rejects([](Scenario& s) { s.angle_grid_deg.resize(1); });
  rejects([](Scenario& s) { s.angle_grid_deg[0] = -120.0; });
  rejects([](Scenario& s) { s.mainlobe.clear(); });
  rejects([](Scenario& s) { s.mainlobe = {{10.0, -10.0}}; });
}

TEST_CASE("power annulus arithmetic") {
  const Scenario sc = desk_scenario();
  CHECK(sc.power_floor() == doctest::Approx((1.0 - 0.3) * 1.0 / 4.0));
  CHECK(sc.power_cap() == doctest::Approx((1.0 + 0.3) * 1.0 / 4.0));
  CHECK(sc.proximal_weight() == doctest::Approx(1e-3 * sc.lambda_g));
  Scenario tuned = sc;
  tuned.lambda_s = 0.25;
  CHECK(tuned.proximal_weight() == doctest::Approx(0.25));
  CHECK(sc.dim() == 64);
  CHECK(sc.filter_len() == 20);
}

TEST_CASE("psk constellation geometry") {
  const Constellation q = Constellation::psk(4);
  const auto pts = q.points();
  REQUIRE(pts.size() == 4);
  const Scalar r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(pts[0] - Complex(r, r)) <= 1e-12);
  for (const Complex p : pts) CHECK(std::abs(std::abs(p) - 1.0) <= 1e-12);
  CHECK(q.psk_half_angle == doctest::Approx(kPi / 4));
  CHECK(Constellation::psk(8).psk_half_angle == doctest::Approx(kPi / 8));
  CHECK(Constellation::psk(8).psk_phase_offset() == 0.0);

  const Constellation b = Constellation::psk(2);
  CHECK(std::abs(b.points()[0] - Complex(1, 0)) <= 1e-12);
  CHECK(std::abs(b.points()[1] - Complex(-1, 0)) <= 1e-12);
  CHECK(b.psk_half_angle == doctest::Approx(kPi / 2));
  CHECK_THROWS_AS(Constellation::psk(1), ConfigError);

  const Constellation custom = Constellation::psk(8, 0.2);
  CHECK(custom.psk_half_angle == doctest::Approx(0.2));
}

TEST_CASE("qam constellation normalization") {
  const Constellation q = Constellation::qam(16);
  const auto pts = q.points();
  REQUIRE(pts.size() == 16);
  Scalar power = 0.0;
  for (const Complex p : pts) power += std::norm(p);
  CHECK(power / 16.0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.qam_side() == 4);
  CHECK(q.qam_scale() == doctest::Approx(1.0 / std::sqrt(10.0)));
  CHECK_THROWS_AS(Constellation::qam(8), ConfigError);
  CHECK_THROWS_AS(Constellation::qam(2), ConfigError);
}

TEST_CASE("uniform angle grid covers both endpoints") {
  const RVec g = uniform_angle_grid(-90.0, 90.0, 1.0);
  REQUIRE(g.size() == 181);
  CHECK(g[0] == -90.0);
  CHECK(g[180] == doctest::Approx(90.0));
  CHECK_THROWS_AS(uniform_angle_grid(0.0, 10.0, 0.0), ConfigError);
  CHECK_THROWS_AS(uniform_angle_grid(10.0, 0.0, 1.0), ConfigError);
}

TEST_CASE("steering vector phases at half-wavelength spacing") {
  Scenario sc = mini_scenario();
  sc.nt = 4;
  const CVec broadside = steering_vector(sc, 0.0);
  for (Index k = 0; k < 4; ++k) CHECK(std::abs(broadside[k] - Complex(1, 0)) <= 1e-14);
  // sin 30 deg = 1/2, so successive elements advance by pi/2
  const CVec a30 = steering_vector(sc, 30.0);
  CHECK(std::abs(a30[1] - Complex(0, 1)) <= 1e-12);
  CHECK(std::abs(a30[2] - Complex(-1, 0)) <= 1e-12);
  CHECK(std::abs(a30[3] - Complex(0, -1)) <= 1e-12);
  const CVec mirrored = steering_vector(sc, -30.0);
  for (Index k = 0; k < 4; ++k) CHECK(std::abs(mirrored[k] - std::conj(a30[k])) <= 1e-12);
  CHECK_THROWS_AS(steering_vector(sc, 91.0), std::domain_error);
}

TEST_CASE("single-antenna beampattern ratio is waveform-independent") {
  Scenario sc = mini_scenario();
  sc.nt = 1;
  const BeampatternMatrices bp = build_beampattern_matrices(sc);
  std::mt19937_64 rng(5);
  const Scalar first = beampattern_ratio(testutil::randv(rng, sc.dim()), bp);
  for (int i = 0; i < 100; ++i) {
    const Scalar r = beampattern_ratio(testutil::randv(rng, sc.dim()), bp);
    CHECK(std::abs(r - first) <= 1e-10 * std::max(1.0, std::abs(first)));
  }
}

TEST_CASE("angular region form at broadside is rank one per slot") {
  const Scenario sc = mini_scenario();
  const std::vector<Scalar> angles{0.0};
  const std::vector<Scalar> weights{1.0};
  const CMat form = angular_region_form(sc, angles, weights);
  REQUIRE(form.rows() == sc.dim());
  for (int n = 0; n < sc.ns; ++n) {
    const CMat blk = form.block(n * sc.nt, n * sc.nt, sc.nt, sc.nt);
    CHECK((blk - CMat::Ones(sc.nt, sc.nt)).norm() <= 1e-14);
  }
  CHECK(std::abs(form(0, sc.nt)) == 0.0);
  const EigCache e = hermitian_eig(form, "broadside");
  CHECK(e.a.maxCoeff() == doctest::Approx(2.0));
  CHECK(e.a.minCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("beampattern forms partition the grid and carry loading") {
  const Scenario sc = mini_scenario();
  const BeampatternMatrices bp = build_beampattern_matrices(sc);
  CHECK(bp.mainlobe_angles_deg.size() + bp.sidelobe_angles_deg.size() ==
        static_cast<std::size_t>(sc.angle_grid_deg.size()));
  for (Scalar a : bp.mainlobe_angles_deg) CHECK(angle_in_mainlobe(sc, a));
  for (Scalar a : bp.sidelobe_angles_deg) CHECK(!angle_in_mainlobe(sc, a));
  CHECK(bp.diagonal_loading > 0.0);
  const EigCache sl = hermitian_eig(bp.sidelobe_form, "sl");
  CHECK(sl.a.minCoeff() >= bp.diagonal_loading * (1.0 - 1e-9));
  CHECK((bp.mainlobe_form - bp.mainlobe_form.adjoint()).norm() <= 1e-12);
  CHECK((bp.sidelobe_form - bp.sidelobe_form.adjoint()).norm() <= 1e-12);
}

TEST_CASE("degenerate angular regions are rejected") {
  Scenario off_grid = mini_scenario();
  off_grid.mainlobe = {{41.0, 44.0}};
  CHECK_THROWS_AS(build_beampattern_matrices(off_grid), ConfigError);
  Scenario all_main = mini_scenario();
  all_main.mainlobe = {{-90.0, 90.0}};
  CHECK_THROWS_AS(build_beampattern_matrices(all_main), ConfigError);
}

TEST_CASE("shift operator family on a scalar two-sample block") {
  Scenario sc = mini_scenario();
  sc.nt = 1;
  sc.ns = 2;
  sc.ncp = 0;
  const ShiftOperators so = build_shift_operators(sc);
  CHECK(so.zero_lag_index == 2);
  REQUIRE(so.count() == 3);
  CHECK((so.at(2) - CMat::Identity(2, 2)).norm() == 0.0);
  // one-sample shift matrices appear as the transposed pair at lags +-1;
  // lag +1 pairs the window head with the block tail (see the splice test)
  CMat super = CMat::Zero(2, 2);
  super(0, 1) = 1.0;
  CMat sub = CMat::Zero(2, 2);
  sub(1, 0) = 1.0;
  CHECK((so.at(3) - super).norm() == 0.0);
  CHECK((so.at(1) - sub).norm() == 0.0);
  CHECK_THROWS_AS(so.at(0), std::out_of_range);
  CHECK_THROWS_AS(so.at(4), std::out_of_range);
}

TEST_CASE("lag windows splice the continuous block stream exactly") {
  const Scenario sc = mini_scenario();
  const ShiftOperators so = build_shift_operators(sc);
  const int p = so.window_len();
  std::mt19937_64 rng(7);
  const CVec s_pre = testutil::randv(rng, sc.dim());
  const CVec s = testutil::randv(rng, sc.dim());
  const CVec s_post = testutil::randv(rng, sc.dim());
  CVec stream(3 * p);
  stream << so.combined_block(s_pre), so.combined_block(s), so.combined_block(s_post);
  // the window at offset ell covers stream samples p+ell .. p+ell+p-1;
  // positive offsets borrow from the next block, negative from the previous
  for (int ell = -(p - 1); ell <= p - 1; ++ell) {
    CVec window = so.at(p + ell) * s;
    if (ell > 0) window += so.at(ell) * s_post;
    if (ell < 0) window += so.at(2 * p + ell) * s_pre;
    for (int u = 0; u < p; ++u) {
      CHECK(std::abs(window[u] - stream[p + ell + u]) <= 1e-12);
    }
  }
}

TEST_CASE("zero-lag image equals the CP-extended combined block") {
  const Scenario sc = mini_scenario();
  const ShiftOperators so = build_shift_operators(sc);
  std::mt19937_64 rng(9);
  const CVec s = testutil::randv(rng, sc.dim());
  const CVec y = so.combined_block(s);
  const CVec img = so.at(so.zero_lag_index) * s;
  CHECK((img - y).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(img.squaredNorm() == doctest::Approx(y.squaredNorm()));
  for (int u = 0; u < sc.ncp; ++u) {
    CHECK(std::abs(y[u] - y[sc.ns + u]) <= 1e-12);
  }
}

TEST_CASE("impulse energy counts the covering windows") {
  const Scenario sc = mini_scenario();
  const ShiftOperators so = build_shift_operators(sc);
  CVec e = CVec::Zero(sc.dim());
  e[0] = 1.0;
  Scalar total = 0.0;
  for (int n = 1; n <= so.count(); ++n) total += (so.at(n) * e).squaredNorm();
  CHECK(total == doctest::Approx(static_cast<Scalar>(so.window_len())));
}

TEST_CASE("lag operators bounded by the CP-duplicated steering norm") {
  const Scenario sc = desk_scenario();
  const ShiftOperators so = build_shift_operators(sc);
  const Scalar bound = std::sqrt(2.0) * so.steer.norm() + 1e-9;
  for (int n = 1; n <= so.count(); ++n) {
    Eigen::JacobiSVD<CMat> svd(so.at(n));
    CHECK(svd.singularValues()[0] <= bound);
  }
}

TEST_CASE("selection operators round-trip the stacked variable") {
  const Scenario sc = mini_scenario();
  const SelectionOperators sel = build_selection_operators(sc);
  std::mt19937_64 rng(3);
  const CVec s = testutil::randv(rng, sc.dim());
  const CVec x = sel.stack(s, 2.5);
  REQUIRE(x.size() == sc.dim() + 1);
  CHECK((sel.extract_waveform(x) - s).norm() == 0.0);
  CHECK(sel.extract_t(x) == Complex(2.5, 0.0));
  const CMat m = testutil::random_psd(rng, sc.dim());
  const CMat padded = sel.pad_waveform_form(m);
  const Complex full = (x.adjoint() * padded * x).value();
  const Complex small = (s.adjoint() * m * s).value();
  CHECK(std::abs(full - small) <= 1e-10 * std::max(1.0, std::abs(small)));
}

TEST_CASE("padded sidelobe decomposition keeps the epigraph axis first") {
  const ProblemModel model = build_model(mini_scenario());
  const EigCache& st = model.stacked_eig;
  REQUIRE(st.dim() == model.sel.n + 1);
  CHECK(st.a[0] == 0.0);
  CHECK(std::abs(st.q(model.sel.n, 0) - Complex(1, 0)) == 0.0);
  CHECK(st.q.col(0).norm() == doctest::Approx(1.0));
  CHECK(st.a.tail(model.sel.n).minCoeff() > 0.0);
  const CMat padded = model.sel.pad_waveform_form(model.bp.sidelobe_form);
  CHECK(st.reconstruction_error(padded) <= 1e-10);
  CHECK((st.q.adjoint() * st.q - CMat::Identity(st.dim(), st.dim())).norm() <= 1e-10);
}

TEST_CASE("model bound dominates the ratio of random waveforms") {
  const ProblemModel model = build_model(desk_scenario());
  CHECK(model.ratio_upper_bound > 0.0);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const CVec s = testutil::randv(rng, model.scenario.dim());
    CHECK(beampattern_ratio(s, model.bp) <= model.ratio_upper_bound * (1.0 + 1e-9));
  }
  CHECK_THROWS_AS(beampattern_ratio(CVec::Zero(model.scenario.dim()), model.bp),
                  std::domain_error);
}

TEST_CASE("peak form scales with eta") {
  Scenario sc = mini_scenario();
  const ProblemModel model = build_model(sc);
  const CMat& gp = model.shift.at(model.shift.zero_lag_index);
  const CMat expected = sc.eta * (gp.adjoint() * gp);
  CHECK(model.peak_eig.reconstruction_error(expected) <= 1e-10);
}
