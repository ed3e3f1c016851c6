#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "iccwork/harmonic.hpp"
#include "iccwork/scaling.hpp"

using namespace iccwork;

namespace {

const std::vector<int> kSizes{16, 24, 32, 48};

TEST(Fits, LogLogSlopeOfPowerLaw) {
  std::vector<double> x, y;
  for (int i = 0; i < 8; ++i) {
    x.push_back(std::pow(10.0, -3.0 + 0.3 * i));
    y.push_back(std::pow(x.back(), -1.5));
  }
  const auto f = loglog_slope(x, y);
  EXPECT_NEAR(f.slope, -1.5, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-11);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Fits, LogLogErrors) {
  EXPECT_THROW(loglog_slope({1, 2, 3}, {1, 2, 3}), Error);
  try {
    loglog_slope({1, 2, 3, 4}, {1, -2, 3, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveData);
  }
}

TEST(Peak, ExactOnQuadratics) {
  std::vector<double> x, y;
  for (int i = 0; i < 11; ++i) {
    x.push_back(0.3 + 0.07 * i);
    y.push_back(2.5 - 4.0 * (x.back() - 0.6123) * (x.back() - 0.6123));
  }
  const auto pk = find_peak(x, y);
  EXPECT_NEAR(pk.omega_star_sq, 0.6123, 1e-12);
  EXPECT_NEAR(pk.w_irr_max, 2.5, 1e-12);
  EXPECT_EQ(pk.stencil, 5);
  EXPECT_LT(pk.uncertainty, 1e-10);
}

TEST(Peak, InvariantUnderShiftAndScale) {
  std::vector<double> x, y;
  for (int i = 0; i < 15; ++i) {
    x.push_back(0.1 * i);
    y.push_back(1.0 / (1.0 + 9.0 * (x.back() - 0.73) * (x.back() - 0.73)));
  }
  const auto a = find_peak(x, y);
  std::vector<double> y2;
  for (double v : y) y2.push_back(3.0 * v + 11.0);
  const auto b = find_peak(x, y2);
  EXPECT_NEAR(a.omega_star_sq, b.omega_star_sq, 1e-12);
  EXPECT_NEAR(3.0 * a.w_irr_max + 11.0, b.w_irr_max, 1e-12);
  EXPECT_GT(a.omega_star_sq, 0.6);
  EXPECT_LT(a.omega_star_sq, 0.8);
}

TEST(Peak, EdgeAndTooFewPoints) {
  try {
    find_peak({1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EdgePeak);
  }
  try {
    find_peak({1, 2, 3, 4}, {1, 2, 3, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewPoints);
  }
}

TEST(Peak, HarmonicSweepHasNoFinitePeak) {
  // the harmonic W_IRR grows without bound towards h1 from the linear side
  const auto c = UniversalConstants::standard();
  ModelParams p;
  p.g = 0.1;
  p.L = 60;
  std::vector<double> x, y;
  for (int i = 10; i >= 0; --i) {
    const double w2 = c.h1 + 1e-3 * std::pow(10.0, 0.2 * i);
    x.push_back(w2);
    y.push_back(quench_work_statistics(p.with_omega_sq(w2), QuenchSpec::from_delta(w2, 0.01, +1)).irreversible_work);
  }
  std::vector<double> xs(x.rbegin(), x.rend()), ys(y.rbegin(), y.rend());
  try {
    find_peak(xs, ys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EdgePeak);
  }
}

std::map<int, PeakEstimate> synthetic_peaks(double wc, double c, int p) {
  std::map<int, PeakEstimate> peaks;
  for (int L : kSizes) peaks[L].omega_star_sq = wc + c * std::pow(static_cast<double>(L), -p);
  return peaks;
}

TEST(Extrapolate, RecoversInverseL) {
  const auto r = extrapolate_critical(synthetic_peaks(4.0, 3.0, 1), 0.1);
  EXPECT_EQ(r.selected_p, 1);
  EXPECT_NEAR(r.fit_p1.omega_c_sq, 4.0, 1e-10);
  EXPECT_NEAR(r.fit_p1.c, 3.0, 1e-10);
  ASSERT_TRUE(r.estimate.has_value());
}

TEST(Extrapolate, SecondOrderBranchWinsOnItsOwnData) {
  const auto r = extrapolate_critical(synthetic_peaks(2.5, -40.0, 2));
  EXPECT_EQ(r.selected_p, 2);
  EXPECT_NEAR(r.omega_c_sq, 2.5, 1e-10);
  EXPECT_NEAR(r.fit_p2.c, -40.0, 1e-8);
  EXPECT_TRUE(r.below_h1);
}

TEST(Extrapolate, Degenerate) {
  std::map<int, PeakEstimate> two{{16, {}}, {32, {}}};
  try {
    extrapolate_critical(two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateFit);
  }
}

// W = W_max - L ln(1 + x^2), x = L^{1/nu} (w^2 - w*^2): both ordinates collapse exactly.
SweepTable synthetic_collapse(double nu, std::map<int, PeakEstimate>& peaks, double shift = 0.0) {
  SweepTable t;
  peaks.clear();
  for (int L : kSizes) {
    const double ws = 1.0 - 2.0 / L + shift;
    const double wmax = 1e-3 * L;
    peaks[L] = {ws, wmax, 5, 0.0};
    const double s = std::pow(static_cast<double>(L), 1.0 / nu);
    for (int i = 0; i < 41; ++i) {
      // per-size grids that are not aligned in the rescaled variable
      const double x = -3.0 + 6.0 * i / 40.0 + 0.05 * std::sin(L + i);
      ScalingRow r;
      r.L = L;
      r.omega_sq = ws + x / s;
      r.g = 0.1;
      r.w_irr = wmax - L * std::log1p(x * x);
      t.rows.push_back(r);
    }
  }
  t.validate();
  return t;
}

class CollapseRecovery : public ::testing::TestWithParam<double> {};

TEST_P(CollapseRecovery, InjectedExponent) {
  const double nu = GetParam();
  std::map<int, PeakEstimate> peaks;
  const auto t = synthetic_collapse(nu, peaks);
  const auto grid = linear_grid(0.5, 2.0, 31);
  const auto r = collapse(t, peaks, grid);
  EXPECT_NEAR(r.nu, nu, 0.5 * (grid[1] - grid[0]));
  EXPECT_NEAR(r.nu_linearized, nu, 0.5 * (grid[1] - grid[0]));
  EXPECT_TRUE(r.ordinates_agree);
  EXPECT_EQ(r.profile.size(), grid.size());
  for (const auto& [n, q] : r.profile) EXPECT_GE(q, 0.0);
  EXPECT_EQ(r.rescaled.size(), t.rows.size());
}

INSTANTIATE_TEST_SUITE_P(Synthetic, CollapseRecovery, ::testing::Values(0.5, 1.0, 2.0));

TEST(Collapse, QualityInvariantUnderReorderAndTranslation) {
  std::map<int, PeakEstimate> peaks;
  const auto t = synthetic_collapse(1.0, peaks);
  const auto grid = linear_grid(0.5, 2.0, 16);
  const auto a = collapse(t, peaks, grid);

  SweepTable shuffled;
  for (auto it = t.rows.rbegin(); it != t.rows.rend(); ++it) shuffled.rows.push_back(*it);
  std::map<int, PeakEstimate> peaks2;
  const auto b = collapse(shuffled, peaks, grid);

  const auto shifted = synthetic_collapse(1.0, peaks2, 0.375);
  const auto c = collapse(shifted, peaks2, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(a.profile[i].second, b.profile[i].second, 1e-15 + 1e-12 * a.profile[i].second);
    EXPECT_NEAR(a.profile[i].second, c.profile[i].second, 1e-15 + 1e-9 * a.profile[i].second);
  }
}

TEST(Collapse, NoOverlap) {
  SweepTable t;
  std::map<int, PeakEstimate> peaks;
  for (int k = 0; k < 3; ++k) {
    const int L = kSizes[static_cast<std::size_t>(k)];
    peaks[L] = {0.0, 0.0, 5, 0.0};
    for (int i = 0; i < 6; ++i) t.rows.push_back({L, 10.0 * k + i, 0.1, -1.0 * i, {}, {}, Source::dmrg});
  }
  try {
    collapse(t, peaks, linear_grid(0.5, 2.0, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoOverlap);
  }
}

TEST(Table, ValidateRejectsUnsortedGroups) {
  SweepTable t;
  t.rows.push_back({16, 1.0, 0.1, 0.0, {}, {}, Source::dmrg});
  t.rows.push_back({16, 1.0, 0.1, 0.0, {}, {}, Source::harmonic});
  EXPECT_NO_THROW(t.validate());
  t.rows.push_back({16, 0.9, 0.1, 0.0, {}, {}, Source::dmrg});
  EXPECT_THROW(t.validate(), Error);
}

}  // namespace
