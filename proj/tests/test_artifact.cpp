#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "eogclean/artifact.hpp"
#include "eogclean/errors.hpp"
#include "eogclean/eval.hpp"
#include "eogclean/random.hpp"
#include "eogclean/segmentation.hpp"
#include "eogclean/synth.hpp"

using namespace eogclean;
using namespace eogclean::artifact;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

// Direct evaluation of the definition over every admissible lag.
LaggedCorrelation brute_force(const std::vector<double>& e, const std::vector<double>& s, int max_lag) {
  const auto n = static_cast<int>(e.size());
  double me = 0, ms = 0;
  for (int i = 0; i < n; ++i) {
    me += e[static_cast<std::size_t>(i)];
    ms += s[static_cast<std::size_t>(i)];
  }
  me /= n;
  ms /= n;
  double ve = 0, vs = 0;
  for (int i = 0; i < n; ++i) {
    ve += std::pow(e[static_cast<std::size_t>(i)] - me, 2);
    vs += std::pow(s[static_cast<std::size_t>(i)] - ms, 2);
  }
  const double denom = n * std::sqrt(ve / n) * std::sqrt(vs / n);
  LaggedCorrelation best{std::numeric_limits<double>::infinity(), 0};
  const int reach = std::max(0, max_lag - 1);
  for (int lag : [&] {
         std::vector<int> lags{0};
         for (int d = 1; d <= reach; ++d) {
           lags.push_back(-d);
           lags.push_back(d);
         }
         return lags;
       }()) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const int j = i - lag;
      if (j < 0 || j >= n) continue;
      acc += (e[static_cast<std::size_t>(i)] - me) * (s[static_cast<std::size_t>(j)] - ms);
    }
    const double rho = acc / denom;
    if (rho < best.rho) best = {rho, lag};
  }
  if (best.rho > 0.0) best = {0.0, 0};
  return best;
}

ica::ComponentSet make_components(const std::vector<std::vector<double>>& rows, std::vector<Interval> trials = {}) {
  ica::ComponentSet c;
  c.components.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      c.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  c.trial_bounds = std::move(trials);
  c.sample_rate = 250.0;
  return c;
}

double blackman_rising(std::size_t n, std::size_t slope) {
  // Standard Blackman window of M = 2 * slope + 1 points, index n in [0, slope].
  const double m1 = static_cast<double>(2 * slope);
  const double x = static_cast<double>(n);
  return 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * x / m1) + 0.08 * std::cos(4.0 * std::numbers::pi * x / m1);
}

synth::Session blink_session(std::uint64_t seed) {
  synth::SynthSpec spec;
  spec.seed = seed;
  spec.blink_topography_jitter = 0.3;
  spec.sensor_noise = 0.05;
  return synth::generate(spec);
}

}  // namespace

TEST_CASE("eog correlation examples") {
  const auto x = noise(5000, 1);
  std::vector<double> neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  CHECK(eog_component_correlation(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(lagged_eog_correlation(x, neg).lag == 0);
  // A smooth sequence has positive autocorrelation over every searched lag.
  std::vector<double> smooth(x.size(), 0.0);
  for (std::size_t i = 30; i < x.size(); ++i) {
    for (std::size_t k = 0; k < 30; ++k) smooth[i] += x[i - k];
  }
  CHECK(eog_component_correlation(smooth, smooth) == 0.0);

  // s(i - 3) = -x(i)  =>  s(j) = -x(j + 3)
  std::vector<double> shifted(x.size(), 0.0);
  for (std::size_t j = 0; j + 3 < x.size(); ++j) shifted[j] = -x[j + 3];
  const LaggedCorrelation lc = lagged_eog_correlation(x, shifted);
  const LaggedCorrelation oracle = brute_force(x, shifted, kDefaultMaxLag);
  CHECK(lc.lag == 3);
  CHECK(lc.lag == oracle.lag);
  CHECK(lc.rho == doctest::Approx(oracle.rho).epsilon(1e-12));
  CHECK(lc.rho < -0.99);

  // lag 7 is outside |lag| < 7
  std::vector<double> far(x.size(), 0.0);
  for (std::size_t j = 0; j + 7 < x.size(); ++j) far[j] = -x[j + 7];
  CHECK(lagged_eog_correlation(x, far).rho > -0.1);

  CHECK_THROWS_AS(eog_component_correlation(std::vector<double>(x.size(), 1.0), x), UndefinedCorrelationError);
  CHECK_THROWS_AS(eog_component_correlation(x, std::vector<double>(x.size(), 0.0)), UndefinedCorrelationError);
  CHECK_THROWS_AS(eog_component_correlation(x, neg, -1), ArgumentError);
  CHECK_THROWS_AS(eog_component_correlation(x, std::vector<double>(10, 1.0)), ArgumentError);
}

TEST_CASE("eog correlation matches brute force on random pairs") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const auto e = noise(300, 100 + static_cast<std::uint64_t>(trial));
    auto s = noise(300, 500 + static_cast<std::uint64_t>(trial));
    const int shift = static_cast<int>(rng.uniform() * 9) - 4;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto j = static_cast<int>(i) + shift;
      if (j >= 0 && j < 300) s[i] -= 0.7 * e[static_cast<std::size_t>(j)];
    }
    for (int max_lag : {0, 1, 3, 7}) {
      const LaggedCorrelation got = lagged_eog_correlation(e, s, max_lag);
      const LaggedCorrelation want = brute_force(e, s, max_lag);
      REQUIRE(got.rho == doctest::Approx(want.rho).epsilon(1e-12));
      REQUIRE(got.lag == want.lag);
      REQUIRE(got.rho <= 0.0);
      REQUIRE(got.rho >= -1.0);
    }
  }
}

TEST_CASE("correlation report shape and cumulative sums") {
  const auto eog = noise(5000, 2);
  std::vector<double> minus(eog.size());
  std::transform(eog.begin(), eog.end(), minus.begin(), [](double v) { return -v; });
  const std::vector<Interval> trials{{0, 1000}, {1000, 2000}, {2000, 3000}, {3000, 4000}, {4000, 5000}};
  const auto comps = make_components({minus, noise(5000, 3), noise(5000, 4)}, trials);
  const CorrelationReport r = build_correlation_report(eog, comps);
  CHECK(r.c.rows() == 3);
  CHECK(r.c.cols() == 5);
  REQUIRE(r.cc.size() == 3);
  CHECK(r.cc[0] == doctest::Approx(5.0));
  CHECK(r.labels == std::vector<std::string>{"IC1", "IC2", "IC3"});
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(r.cc[static_cast<std::size_t>(i)] == doctest::Approx(r.c.row(i).cwiseAbs().sum()));
    for (Eigen::Index k = 0; k < 5; ++k) CHECK(r.c(i, k) <= 0.0);
  }
  CHECK(r.selected.empty());

  auto untrialed = comps;
  untrialed.trial_bounds.clear();
  CHECK_THROWS_AS(build_correlation_report(eog, untrialed), SchemaError);
  CHECK_THROWS_AS(build_correlation_report(std::vector<double>(10, 0.0), comps), SchemaError);
}

TEST_CASE("uncorrelated component has small cc at 1e5 samples per trial") {
  const std::size_t per = 100000;
  const auto eog = noise(5 * per, 21);
  const auto other = noise(5 * per, 22);
  std::vector<Interval> trials;
  for (std::size_t k = 0; k < 5; ++k) trials.push_back({k * per, (k + 1) * per});
  const CorrelationReport r = build_correlation_report(eog, make_components({other}, trials));
  // Each |rho| is a minimum over 13 lags of N(0, 1/T) draws: far below 0.02.
  CHECK(r.cc[0] < 0.1);
}

TEST_CASE("select_artifactual") {
  CorrelationReport r;
  r.cc = {0.1, 4.2, 0.3, 3.9};
  r.c = Eigen::MatrixXd::Zero(4, 1);
  CHECK(select_artifactual(r, 2).selected == std::vector<std::size_t>{1, 3});
  CHECK(select_artifactual(r, 2).cc == r.cc);
  r.cc = {2.0, 2.0, 0.1};
  r.c = Eigen::MatrixXd::Zero(3, 1);
  CHECK(select_artifactual(r, 1).selected == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(select_artifactual(r, 0), ArgumentError);
  CHECK_THROWS_AS(select_artifactual(r, 4), ArgumentError);
}

TEST_CASE("selection is invariant to positive rescaling of components") {
  const auto eog = noise(4000, 30);
  auto blinkish = noise(4000, 31);
  for (std::size_t i = 0; i < blinkish.size(); ++i) blinkish[i] -= 0.8 * eog[i];
  const std::vector<Interval> trials{{0, 2000}, {2000, 4000}};
  auto base = make_components({noise(4000, 32), blinkish, noise(4000, 33)}, trials);
  const auto before = select_artifactual(build_correlation_report(eog, base), 1);
  base.components.row(1) *= 1000.0;
  base.components.row(0) *= 0.001;
  const auto after = select_artifactual(build_correlation_report(eog, base), 1);
  CHECK(before.selected == after.selected);
  for (std::size_t i = 0; i < 3; ++i) CHECK(before.cc[i] == doctest::Approx(after.cc[i]).epsilon(1e-10));
}

TEST_CASE("blink component dominates cc on a synthetic session") {
  synth::SynthSpec spec;
  spec.seed = 3;
  const synth::Session s = synth::generate(spec);
  const Recording rec = seg::segment(s.recording);
  const Recording eeg = eeg_channels(rec);
  const auto w = ica::fit_ica(eeg);
  const auto comps = ica::unmix(w, eeg);
  const auto r = select_artifactual(build_correlation_report(rec.samples(*rec.eog_index()), comps), 1);
  // The blink component is the one whose scalp projection best matches the true blink column.
  const Eigen::MatrixXd p = w.w * s.truth.mixing;
  Eigen::Index blink_row = 0;
  p.col(static_cast<Eigen::Index>(s.truth.blink_source)).cwiseAbs().maxCoeff(&blink_row);
  REQUIRE(r.selected.size() == 1);
  CHECK(r.selected[0] == static_cast<std::size_t>(blink_row));
  std::vector<double> sorted = r.cc;
  std::sort(sorted.rbegin(), sorted.rend());
  MESSAGE("cc margin of the blink component: " << sorted[0] - sorted[1]);
  CHECK(sorted[0] > 2.0 * sorted[1]);
}

TEST_CASE("msf_to_wmsf") {
  const MembershipFunction empty(100, {});
  CHECK(msf_to_wmsf(empty, 10).values == std::vector<double>(100, 0.0));

  const MembershipFunction msf(1000, {{300, 500}});
  const auto zero = msf_to_wmsf(msf, 0);
  const auto samples = msf.to_samples();
  for (std::size_t i = 0; i < 1000; ++i) REQUIRE(zero.values[i] == static_cast<double>(samples[i]));

  const std::size_t slope = 125;
  const auto w = msf_to_wmsf(msf, slope);
  CHECK(w.length == 1000);
  CHECK(w.slope_samples == slope);
  for (std::size_t i = 300; i < 500; ++i) REQUIRE(w.values[i] == 1.0);
  for (std::size_t i = 0; i <= 300 - slope; ++i) REQUIRE(w.values[i] == 0.0);
  for (std::size_t i = 500 + slope - 1; i < 1000; ++i) REQUIRE(w.values[i] == 0.0);
  for (std::size_t n = 0; n <= slope; ++n) {
    REQUIRE(w.values[300 - slope + n] == doctest::Approx(blackman_rising(n, slope)).epsilon(1e-12).scale(1.0));
    REQUIRE(w.values[499 + slope - n] == doctest::Approx(blackman_rising(n, slope)).epsilon(1e-12).scale(1.0));
  }
  for (std::size_t i = 300 - slope; i < 300; ++i) REQUIRE(w.values[i + 1] >= w.values[i]);
  for (std::size_t i = 500; i < 500 + slope; ++i) REQUIRE(w.values[i + 1] <= w.values[i]);

  const auto overlap = msf_to_wmsf(MembershipFunction(600, {{100, 200}, {260, 300}}), 100);
  for (double v : overlap.values) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
  const auto near_edges = msf_to_wmsf(MembershipFunction(100, {{0, 10}, {95, 100}}), 50);
  CHECK(near_edges.values.size() == 100);
}

TEST_CASE("partial_reject and complete_reject") {
  const std::size_t n = 2000;
  const auto comps = make_components({noise(n, 40), noise(n, 41), noise(n, 42)});
  const std::vector<std::size_t> sel{0, 2};
  const auto wmsf = msf_to_wmsf(MembershipFunction(n, {{800, 1000}}), 125);

  const auto none = partial_reject(comps, sel, wmsf, 0.0);
  CHECK(none.components == comps.components);

  WindowedMembershipFunction ones{n, std::vector<double>(n, 1.0), 0};
  const auto zeroed = partial_reject(comps, sel, ones, 1.0);
  CHECK(zeroed.components.row(0).isZero(0.0));
  CHECK(zeroed.components.row(2).isZero(0.0));
  CHECK(zeroed.components.row(1) == comps.components.row(1));
  CHECK(complete_reject(comps, sel).components == zeroed.components);

  const auto pr = partial_reject(comps, sel, wmsf, 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    for (Eigen::Index c : {0, 2}) {
      REQUIRE(pr.components(c, ti) == comps.components(c, ti) * (1.0 - wmsf.values[t]));
    }
    REQUIRE(pr.components(1, ti) == comps.components(1, ti));
  }

  // |s_alpha| is non-increasing in alpha
  auto prev = comps.components;
  for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
    const auto cur = partial_reject(comps, sel, wmsf, alpha).components;
    CHECK((cur.cwiseAbs().array() <= prev.cwiseAbs().array()).all());
    prev = cur;
  }

  CHECK(complete_reject(comps, std::vector<std::size_t>{}).components == comps.components);
  CHECK_THROWS_AS(partial_reject(comps, sel, wmsf, 1.5), ArgumentError);
  CHECK_THROWS_AS(partial_reject(comps, sel, wmsf, -0.1), ArgumentError);
  CHECK_THROWS_AS(partial_reject(comps, std::vector<std::size_t>{3}, wmsf, 1.0), ArgumentError);
  CHECK_THROWS_AS(partial_reject(comps, sel, msf_to_wmsf(MembershipFunction(10, {}), 0), 1.0), SchemaError);
  auto frozen = comps;
  frozen.selectable = false;
  CHECK_THROWS_AS(partial_reject(frozen, sel, wmsf, 1.0), ArgumentError);
}

TEST_CASE("complete removal of every component leaves the channel means") {
  const synth::Session s = blink_session(1);
  const Recording eeg = eeg_channels(seg::segment(s.recording));
  const auto w = ica::fit_ica(eeg);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5, 6, 7};
  const Recording flat = ica::remix(w, complete_reject(ica::unmix(w, eeg), all));
  for (std::size_t c = 0; c < flat.channel_count(); ++c) {
    for (double v : flat.samples(c)) REQUIRE(v == w.means(static_cast<Eigen::Index>(c)));
  }
}

TEST_CASE("excise_artifacts") {
  std::vector<double> ramp(10000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const Recording rec(250.0, {{"C3", ramp}, {"EOG", ramp}}, 1, std::nullopt, {{0, 5000}});

  const Recording same = excise_artifacts(rec, MembershipFunction(10000, {}));
  CHECK(same.channels() == rec.channels());
  CHECK(same.trial_bounds().empty());

  const Recording half = excise_artifacts(rec, MembershipFunction(10000, {{0, 5000}}));
  CHECK(half.samples(0)[0] == 5000.0);
  CHECK(half.length() == 5000);

  // 43.62 % of the session marked
  const MembershipFunction scaled(10000, {{100, 2000}, {3000, 4000}, {6000, 7462}});
  CHECK(scaled.marked_count() == 4362);
  const Recording cut = excise_artifacts(rec, scaled);
  CHECK(static_cast<double>(cut.length()) / 10000.0 == doctest::Approx(0.5638));
  const auto marks = scaled.to_samples();
  std::size_t j = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    if (!marks[i]) REQUIRE(cut.samples(0)[j++] == static_cast<double>(i));
  }
  CHECK(j == cut.length());

  CHECK_THROWS_AS(excise_artifacts(rec, MembershipFunction(10000, {{0, 10000}})), EmptyDataError);
  CHECK_THROWS_AS(excise_artifacts(rec, MembershipFunction(99, {})), SchemaError);
}

TEST_CASE("diminished unmixing: empty MSF reproduces W") {
  const synth::Session s = blink_session(2);
  const Recording rec = seg::segment(s.recording);
  const auto w = ica::fit_ica(eeg_channels(rec));
  const auto wp = fit_diminished_unmixing(rec, MembershipFunction(rec.length(), {}));
  CHECK(wp.w == w.w);
  const UnmixingDifference d = unmixing_difference(w, wp);
  CHECK(d.d.isZero(0.0));
  for (Eigen::Index i = 0; i < d.d_lr.size(); ++i) CHECK(d.d_lr(i) == -std::numeric_limits<double>::infinity());

  const auto comps = unmix_diminished(wp, eeg_channels(rec));
  CHECK_FALSE(comps.selectable);
}

TEST_CASE("diminished unmixing recovers the blink-free mixing better") {
  int better = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const synth::Session s = blink_session(seed);
    const Recording rec = seg::segment(s.recording);
    const auto w = ica::fit_ica(eeg_channels(rec));
    const auto wp = fit_diminished_unmixing(rec, s.truth.msf);
    const double a = eval::partial_amari_index(w.w, s.truth.mixing, s.truth.blink_source);
    const double b = eval::partial_amari_index(wp.w, s.truth.mixing, s.truth.blink_source);
    MESSAGE("seed " << seed << ": W " << a << ", W' " << b);
    if (b < a) ++better;
  }
  CHECK(better >= 2);
}

TEST_CASE("unmixing_difference examples") {
  ica::UnmixingMatrix w;
  w.w.resize(2, 2);
  w.w << 3.0, -1.0, 0.5, 0.0;
  w.channel_labels = {"a", "b"};
  ica::UnmixingMatrix twice = w;
  twice.w *= 2.0;
  const auto d2 = unmixing_difference(w, twice);
  CHECK(d2.d == w.w);
  CHECK(d2.d_lr(0, 0) == doctest::Approx(0.0));
  CHECK(d2.d_lr(0, 1) == doctest::Approx(0.0));
  CHECK(d2.d_lr(1, 0) == doctest::Approx(0.0));
  CHECK(UnmixingDifference::is_zero_denominator(d2.d_lr(1, 1)));

  Rng rng(3);
  ica::UnmixingMatrix base;
  base.w.resize(3, 3);
  for (Eigen::Index i = 0; i < 9; ++i) base.w(i / 3, i % 3) = rng.normal();
  base.w.row(0) *= 10.0;  // keep norm order stable under the perturbation
  base.w.row(1) *= 3.0;
  base.channel_labels = {"a", "b", "c"};
  ica::UnmixingMatrix pert = base;
  Eigen::MatrixXd delta(3, 3);
  for (Eigen::Index i = 0; i < 9; ++i) delta(i / 3, i % 3) = 0.01 * rng.normal();
  pert.w += delta;
  const auto d = unmixing_difference(base, pert);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(d.d(i, j) == doctest::Approx(delta(i, j)).epsilon(1e-9));
      CHECK(d.d_lr(i, j) == doctest::Approx(std::log10(std::abs(delta(i, j) / base.w(i, j)))).epsilon(1e-9));
    }
  }

  // rows are compared after sorting by norm
  ica::UnmixingMatrix swapped = base;
  swapped.w.row(0).swap(swapped.w.row(2));
  CHECK(unmixing_difference(swapped, base).d.isZero(0.0));

  ica::UnmixingMatrix other = base;
  other.channel_labels = {"a", "b", "x"};
  CHECK_THROWS_AS(unmixing_difference(base, other), SchemaError);
}

TEST_CASE("csv and json rendering of sentinels") {
  Eigen::MatrixXd m(1, 3);
  m << -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN(), 0.5;
  const std::string csv = to_csv(m);
  CHECK(csv.find("-inf,,0.5") != std::string::npos);
  UnmixingDifference d{Eigen::MatrixXd::Zero(1, 3), m};
  const auto j = to_json(d);
  CHECK(j.at("d_lr")[0][0] == "-inf");
  CHECK(j.at("d_lr")[0][1].is_null());
  CHECK(j.at("d_lr")[0][2] == 0.5);
}
