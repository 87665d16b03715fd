#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <utility>
#include <vector>

#include "raincast/easyuq.hpp"
#include "raincast/errors.hpp"
#include "raincast/rng.hpp"

using namespace raincast;
namespace fs = std::filesystem;

namespace {

DiscreteCDF random_cdf(Rng& rng, int max_atoms = 8) {
  const int k = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_atoms)));
  std::vector<double> atoms(k), cum(k);
  for (double& a : atoms) a = rng.uniform(0.0, 4.0);
  std::sort(atoms.begin(), atoms.end());
  for (double& c : cum) c = rng.uniform(0.05, 1.0);
  std::sort(cum.begin(), cum.end());
  cum.back() = 1.0;
  DiscreteCDF cdf;
  cdf.atoms = atoms;
  cdf.cum = cum;
  cdf.validate();
  return cdf;
}

// midpoint Riemann sum of the definition over the padded support
double crps_grid_oracle(const DiscreteCDF& cdf, double y, double step = 1e-4) {
  const double lo = std::min(cdf.atoms.front(), y) - 1.0;
  const double hi = std::max(cdf.atoms.back(), y) + 1.0;
  double total = 0.0;
  const long long cells = static_cast<long long>(std::ceil((hi - lo) / step));
  for (long long i = 0; i < cells; ++i) {
    const double u = lo + (static_cast<double>(i) + 0.5) * step;
    const auto it = std::upper_bound(cdf.atoms.begin(), cdf.atoms.end(), u);
    const double f = it == cdf.atoms.begin() ? 0.0 : cdf.cum[it - cdf.atoms.begin() - 1];
    const double h = y <= u ? 1.0 : 0.0;
    total += step * (f - h) * (f - h);
  }
  return total;
}

// weighted min-max characterization: g_i = max_{j>=i} min_{k<=i} wAv(k..j)
std::vector<double> minmax_oracle(const std::vector<double>& z, const std::vector<double>& w) {
  const std::size_t n = z.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1e300;
    for (std::size_t j = i; j < n; ++j) {
      double worst = 1e300;
      for (std::size_t k = 0; k <= i; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t t = k; t <= j; ++t) {
          num += w[t] * z[t];
          den += w[t];
        }
        worst = std::min(worst, num / den);
      }
      best = std::max(best, worst);
    }
    out[i] = best;
  }
  return out;
}

// nearest valid family member: clamp to [0,1], make rows non-decreasing,
// sweep columns antitonic (min against the row above preserves row order),
// then pin the final column at 1
void project_to_family(std::vector<double>& m, std::size_t rows, std::size_t cols) {
  for (double& v : m) v = std::clamp(v, 0.0, 1.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 1; j < cols; ++j)
      m[i * cols + j] = std::max(m[i * cols + j], m[i * cols + j - 1]);
  for (std::size_t i = 1; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m[i * cols + j] = std::min(m[i * cols + j], m[(i - 1) * cols + j]);
  for (std::size_t i = 0; i < rows; ++i) m[i * cols + cols - 1] = 1.0;
}

double family_crps(const IdrFit& shape, const std::vector<double>& matrix,
                   const std::vector<std::pair<double, double>>& pairs) {
  IdrFit candidate = shape;
  candidate.cdf = matrix;
  candidate.validate();
  double total = 0.0;
  for (const auto& [x, y] : pairs) total += crps_discrete(idr_predict(candidate, x), y);
  return total / static_cast<double>(pairs.size());
}

std::vector<std::pair<double, double>> random_pairs(Rng& rng, int n) {
  std::vector<std::pair<double, double>> pairs;
  for (int t = 0; t < n; ++t) {
    double x = rng.uniform(0.0, 3.0);
    if (rng.uniform() < 0.3 && !pairs.empty()) x = pairs.back().first;  // force ties
    pairs.emplace_back(x, rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 5.0));
  }
  return pairs;
}

}  // namespace

TEST_CASE("cdf: validation accepts good and rejects malformed inputs") {
  DiscreteCDF ok;
  ok.atoms = {0.0, 2.0};
  ok.cum = {0.5, 1.0};
  CHECK_NOTHROW(ok.validate());

  DiscreteCDF bad = ok;
  bad.atoms = {2.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ok;
  bad.cum = {0.5, 0.9};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ok;
  bad.cum = {0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ok;
  bad.cum = {1.0, 0.5};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.atoms.clear();
  bad.cum.clear();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("cdf: empirical construction merges ties with counted weights") {
  const DiscreteCDF cdf = cdf_from_samples({0.0, 2.0, 0.0});
  REQUIRE(cdf.atoms == std::vector<double>{0.0, 2.0});
  CHECK(cdf.cum[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(cdf.cum[1] == 1.0);

  const DiscreteCDF single = cdf_from_samples({7.25});
  CHECK(single.atoms == std::vector<double>{7.25});
  CHECK(single.cum == std::vector<double>{1.0});
}

TEST_CASE("cdf: step construction drops zero-mass atoms") {
  const DiscreteCDF cdf = cdf_from_steps({0.0, 1.0, 2.0, 3.0}, {0.25, 0.25, 1.0, 1.0});
  CHECK(cdf.atoms == std::vector<double>{0.0, 2.0});
  CHECK(cdf.cum == std::vector<double>{0.25, 1.0});
}

TEST_CASE("crps: printed examples hold exactly") {
  CHECK(crps_discrete(point_mass(3.0), 5.0) == 2.0);
  DiscreteCDF two;
  two.atoms = {0.0, 2.0};
  two.cum = {0.5, 1.0};
  CHECK(crps_discrete(two, 1.0) == 0.5);
  CHECK(crps_discrete(point_mass(4.0), 4.0) == 0.0);
}

TEST_CASE("crps: point masses reduce to absolute error") {
  Rng rng(301);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-3.0, 3.0);
    const double y = rng.uniform(-3.0, 3.0);
    CHECK(crps_discrete(point_mass(v), y) == std::fabs(v - y));
  }
}

TEST_CASE("crps: matches the fine-grid integration oracle within 1e-4") {
  Rng rng(302);
  for (int i = 0; i < 60; ++i) {
    const DiscreteCDF cdf = random_cdf(rng);
    const double y = rng.uniform(-0.5, 4.5);
    CHECK(std::fabs(crps_discrete(cdf, y) - crps_grid_oracle(cdf, y)) <= 1e-4);
  }
}

TEST_CASE("crps: ensemble identity mean|x-y| - 0.5 mean|x-x'|") {
  Rng rng(303);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_index(6));
    std::vector<double> xs(n);
    for (double& v : xs) v = rng.uniform(0.0, 5.0);
    const double y = rng.uniform(0.0, 5.0);

    double e1 = 0.0, e2 = 0.0;
    for (double a : xs) {
      e1 += std::fabs(a - y);
      for (double b : xs) e2 += std::fabs(a - b);
    }
    e1 /= n;
    e2 /= static_cast<double>(n) * n;
    CHECK(crps_discrete(cdf_from_samples(xs), y) ==
          doctest::Approx(e1 - 0.5 * e2).epsilon(1e-12));
  }
}

TEST_CASE("crps: nonnegative, zero only for a point mass at y") {
  Rng rng(304);
  for (int i = 0; i < 100; ++i) {
    const DiscreteCDF cdf = random_cdf(rng);
    const double y = rng.uniform(-0.5, 4.5);
    const double score = crps_discrete(cdf, y);
    CHECK(score >= 0.0);
    if (cdf.size() > 1 || cdf.atoms[0] != y) CHECK(score > 0.0);
  }
}

TEST_CASE("pava: hand cases") {
  CHECK(pava_antitonic({1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}) ==
        std::vector<double>{1.0, 0.5, 0.5});
  CHECK(pava_antitonic({3.0, 2.0, 1.0}, {1.0, 1.0, 1.0}) ==
        std::vector<double>{3.0, 2.0, 1.0});  // already antitonic
  const std::vector<double> pooled = pava_antitonic({0.0, 1.0}, {1.0, 3.0});
  CHECK(pooled[0] == doctest::Approx(0.75));  // weighted pool (0*1 + 1*3)/4
  CHECK(pooled[1] == doctest::Approx(0.75));
}

TEST_CASE("pava: equals the weighted min-max oracle on random instances") {
  Rng rng(305);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_index(12));
    std::vector<double> z(n), w(n);
    for (double& v : z) v = rng.uniform(0.0, 1.0);
    for (double& v : w) v = 1.0 + rng.uniform_index(4);
    const std::vector<double> fit = pava_antitonic(z, w);
    const std::vector<double> oracle = minmax_oracle(z, w);
    for (int i = 0; i < n; ++i) CHECK(std::fabs(fit[i] - oracle[i]) <= 1e-10);
  }
}

TEST_CASE("idr_fit: hand example {(1,0),(2,5),(3,3)}") {
  const IdrFit fit = idr_fit({{1.0, 0.0}, {2.0, 5.0}, {3.0, 3.0}});
  CHECK(fit.predictors == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(fit.thresholds == std::vector<double>{0.0, 3.0, 5.0});

  const DiscreteCDF at1 = idr_predict(fit, 1.0);
  CHECK(at1.atoms == std::vector<double>{0.0});
  CHECK(at1.cum == std::vector<double>{1.0});

  const DiscreteCDF at2 = idr_predict(fit, 2.0);
  REQUIRE(at2.atoms == std::vector<double>{3.0, 5.0});
  CHECK(at2.cum[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(at2.cum[1] == 1.0);
}

TEST_CASE("idr_fit: constant predictor yields the empirical CDF everywhere") {
  const std::vector<double> ys = {2.0, 0.0, 2.0, 7.0, 1.0};
  std::vector<std::pair<double, double>> pairs;
  for (double y : ys) pairs.emplace_back(1.5, y);
  const IdrFit fit = idr_fit(pairs);
  CHECK(fit.rows() == 1);
  const DiscreteCDF got = idr_predict(fit, 1.5);
  const DiscreteCDF want = cdf_from_samples(ys);
  REQUIRE(got.atoms == want.atoms);
  for (std::size_t k = 0; k < got.cum.size(); ++k)
    CHECK(got.cum[k] == doctest::Approx(want.cum[k]).epsilon(1e-12));
}

TEST_CASE("idr_fit: strictly increasing data fits point masses") {
  const IdrFit fit = idr_fit({{0.0, 1.0}, {1.0, 2.0}, {2.0, 4.0}, {3.0, 9.0}});
  for (std::size_t i = 0; i < fit.rows(); ++i) {
    const DiscreteCDF cdf = idr_predict(fit, fit.predictors[i]);
    REQUIRE(cdf.size() == 1);
    CHECK(cdf.cum[0] == 1.0);
  }
  CHECK(idr_predict(fit, 2.0).atoms == std::vector<double>{4.0});
}

TEST_CASE("idr_fit: random instances are isotonic and match the min-max oracle") {
  Rng rng(306);
  for (int rep = 0; rep < 50; ++rep) {
    const auto pairs = random_pairs(rng, 2 + static_cast<int>(rng.uniform_index(10)));
    const IdrFit fit = idr_fit(pairs);
    fit.validate();  // rows valid CDFs, columns antitonic

    // per-threshold equivalence against the weighted min-max formula
    std::vector<std::vector<double>> group_obs(fit.rows());
    std::vector<double> weights(fit.rows(), 0.0);
    for (const auto& [x, y] : pairs) {
      const std::size_t g = static_cast<std::size_t>(
          std::lower_bound(fit.predictors.begin(), fit.predictors.end(), x) -
          fit.predictors.begin());
      group_obs[g].push_back(y);
      weights[g] += 1.0;
    }
    for (std::size_t j = 0; j < fit.cols(); ++j) {
      std::vector<double> z(fit.rows());
      for (std::size_t g = 0; g < fit.rows(); ++g) {
        double hits = 0.0;
        for (double y : group_obs[g]) hits += y <= fit.thresholds[j] ? 1.0 : 0.0;
        z[g] = hits / weights[g];
      }
      const std::vector<double> oracle = minmax_oracle(z, weights);
      for (std::size_t g = 0; g < fit.rows(); ++g)
        CHECK(std::fabs(fit.at(g, j) - oracle[g]) <= 1e-10);
    }
  }
}

TEST_CASE("idr_fit: in-sample CRPS beats climatology and random family members") {
  Rng rng(307);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pairs = random_pairs(rng, 3 + static_cast<int>(rng.uniform_index(9)));
    const IdrFit fit = idr_fit(pairs);
    const double fit_crps = idr_in_sample_crps(fit, pairs);

    // (a) the constant climatological CDF is the single-row family member
    std::vector<double> ys;
    for (const auto& p : pairs) ys.push_back(p.second);
    const DiscreteCDF clim = cdf_from_samples(ys);
    double clim_crps = 0.0;
    for (const auto& [x, y] : pairs) clim_crps += crps_discrete(clim, y);
    clim_crps /= static_cast<double>(pairs.size());
    CHECK(fit_crps <= clim_crps + 1e-12);

    // (b) 100 random isotonic perturbations of the fit, projected to validity
    for (int cand = 0; cand < 100; ++cand) {
      std::vector<double> m = fit.cdf;
      for (double& v : m) v += rng.uniform(-0.25, 0.25);
      project_to_family(m, fit.rows(), fit.cols());
      CHECK(fit_crps <= family_crps(fit, m, pairs) + 1e-12);
    }
  }
}

TEST_CASE("idr_predict: interpolation and clamping") {
  // two predictors; threshold column goes 0 -> 1
  const IdrFit fit = idr_fit({{0.0, 1.0}, {2.0, 3.0}});
  REQUIRE(fit.thresholds == std::vector<double>{1.0, 3.0});

  const DiscreteCDF mid = idr_predict(fit, 1.0);  // midpoint
  REQUIRE(mid.atoms == std::vector<double>{1.0, 3.0});
  CHECK(mid.cum[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mid.cum[1] == 1.0);

  const DiscreteCDF below = idr_predict(fit, -5.0);
  const DiscreteCDF first = idr_predict(fit, 0.0);
  CHECK(below.atoms == first.atoms);
  CHECK(below.cum == first.cum);

  const DiscreteCDF above = idr_predict(fit, 99.0);
  const DiscreteCDF last = idr_predict(fit, 2.0);
  CHECK(above.atoms == last.atoms);
  CHECK(above.cum == last.cum);

  const DiscreteCDF quarter = idr_predict(fit, 0.5);
  CHECK(quarter.cum[0] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("idr_fit: input validation") {
  CHECK_THROWS_AS(idr_fit({}), ValidationError);
  CHECK_THROWS_AS(idr_fit({{1.0, -0.5}}), ValidationError);
  const double nan = std::nan("");
  CHECK_THROWS_AS(idr_fit({{nan, 1.0}}), ValidationError);
}

TEST_CASE("idr grid: per-pixel fit, prediction consistency, container round-trip") {
  const int h = 3, w = 4, t = 12;
  ForecastSet fc;
  for (int i = 0; i < h; ++i) fc.lat.push_back(40.0 + i);
  for (int j = 0; j < w; ++j) fc.lon.push_back(2.0 + j);
  Date d{2010, 6, 1};
  Rng rng(308);
  for (int k = 0; k < t; ++k) {
    fc.dates.push_back(d);
    d = d.next_day();
    for (int px = 0; px < h * w; ++px) {
      const double x = rng.uniform(0.0, 3.0);
      fc.predictions.push_back(static_cast<float>(x));
      fc.truths.push_back(static_cast<float>(std::max(0.0, x + rng.uniform(-1.0, 1.0))));
    }
  }
  fc.validate();

  const IdrGrid grid = idr_fit_grid(fc, 2);
  CHECK(grid.height == h);
  CHECK(grid.width == w);
  grid.validate();

  // grid fit at a pixel equals a scalar idr_fit on that pixel's pairs
  std::vector<std::pair<double, double>> pairs;
  for (int k = 0; k < t; ++k) pairs.emplace_back(fc.prediction(k)[5], fc.truth(k)[5]);
  const IdrFit solo = idr_fit(pairs);
  const IdrFit& cell = grid.fits[5];
  REQUIRE(solo.predictors == cell.predictors);
  REQUIRE(solo.thresholds == cell.thresholds);
  for (std::size_t i = 0; i < solo.cdf.size(); ++i)
    CHECK(solo.cdf[i] == doctest::Approx(cell.cdf[i]).epsilon(1e-15));

  const fs::path path = fs::temp_directory_path() / "raincast_idr_grid.idr";
  grid.save(path);
  const IdrGrid loaded = IdrGrid::load(path);
  CHECK(loaded.height == grid.height);
  CHECK(loaded.width == grid.width);
  for (std::size_t px = 0; px < grid.fits.size(); ++px) {
    REQUIRE(loaded.fits[px].rows() == grid.fits[px].rows());
    REQUIRE(loaded.fits[px].cols() == grid.fits[px].cols());
    for (std::size_t i = 0; i < grid.fits[px].cdf.size(); ++i)
      CHECK(loaded.fits[px].cdf[i] ==
            doctest::Approx(grid.fits[px].cdf[i]).epsilon(1e-6));  // binary32 storage
  }
  fs::remove(path);

  ForecastSet no_truths = fc;
  no_truths.truths.clear();
  CHECK_THROWS_AS(idr_fit_grid(no_truths, 1), ValidationError);
}
