#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "eogclean/errors.hpp"
#include "eogclean/eval.hpp"
#include "eogclean/random.hpp"

using namespace eogclean;
using namespace eogclean::eval;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = sd * rng.normal();
  return x;
}

// Textbook Amari error written out with explicit loops.
double amari_loops(const Eigen::MatrixXd& p) {
  const auto n = p.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = 0.0, sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      mx = std::max(mx, std::abs(p(i, j)));
      sum += std::abs(p(i, j));
    }
    total += sum / mx - 1.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    double mx = 0.0, sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      mx = std::max(mx, std::abs(p(i, j)));
      sum += std::abs(p(i, j));
    }
    total += sum / mx - 1.0;
  }
  return total / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

TEST_CASE("channel_eog_cc") {
  const std::size_t per = 2000;
  const auto eog = noise(5 * per, 1);
  std::vector<double> minus(eog.size());
  std::transform(eog.begin(), eog.end(), minus.begin(), [](double v) { return -v; });
  std::vector<Interval> trials;
  for (std::size_t k = 0; k < 5; ++k) trials.push_back({k * per, (k + 1) * per});
  const Recording rec(250.0, {{"Fz", minus}, {"EOG", eog}, {"Cz", noise(5 * per, 2)}}, 1, std::nullopt, trials);
  const ChannelCc cc = channel_eog_cc(rec);
  CHECK(cc.labels == std::vector<std::string>{"Fz", "Cz"});
  CHECK(cc.cc[0] == doctest::Approx(5.0));
  CHECK(cc.cc[1] < 0.5);

  CHECK_THROWS_AS(channel_eog_cc(Recording(250.0, {{"Fz", minus}}, std::nullopt, std::nullopt, trials)), SchemaError);
  CHECK_THROWS_AS(channel_eog_cc(rec.with_trial_bounds({})), SchemaError);
}

TEST_CASE("channel_eog_cc: independent noise at 1e5 samples per trial") {
  const std::size_t per = 100000;
  std::vector<Interval> trials;
  for (std::size_t k = 0; k < 5; ++k) trials.push_back({k * per, (k + 1) * per});
  const Recording rec(250.0, {{"C3", noise(5 * per, 7)}, {"EOG", noise(5 * per, 8)}}, 1, std::nullopt, trials);
  CHECK(channel_eog_cc(rec).cc[0] < 0.1);
}

TEST_CASE("reduction") {
  const ChannelCc before{{"a", "b"}, {2.0, 4.0}};
  CHECK(reduction(before, before).reduction_percent == 0.0);
  CHECK(reduction(before, ChannelCc{{"a", "b"}, {0.0, 0.0}}).reduction_percent == 100.0);
  const ReductionReport r = reduction(before, ChannelCc{{"a", "b"}, {1.0, 0.5}});
  CHECK(r.reduction_percent == doctest::Approx(75.0));
  CHECK(r.labels == before.labels);
  CHECK(r.per_channel_after == std::vector<double>{1.0, 0.5});
  const ReductionReport scaled = reduction(ChannelCc{{"a", "b"}, {20.0, 40.0}}, ChannelCc{{"a", "b"}, {10.0, 5.0}});
  CHECK(scaled.reduction_percent == doctest::Approx(r.reduction_percent));
  CHECK_THROWS_AS(reduction(before, ChannelCc{{"a", "c"}, {1.0, 1.0}}), SchemaError);
  CHECK_THROWS_AS(reduction(before, ChannelCc{{"a"}, {1.0}}), SchemaError);
}

TEST_CASE("reduction on a 14-channel fixture follows the mean-ratio formula") {
  const std::vector<std::string> labels{"Fz", "FCz", "Cz", "CPz", "Pz", "POz", "F3", "F4", "C3", "C4", "T7", "T8", "P3", "P4"};
  const std::vector<double> before{2.7657, 2.4154, 1.1386, 0.9353, 0.9562, 0.8500, 2.7674,
                                   1.9507, 1.4484, 1.1308, 0.5083, 0.8184, 0.8772, 0.8021};
  const std::vector<double> cr{0.3279, 0.2192, 0.4025, 0.3702, 0.2161, 0.3119, 0.3168,
                               0.3080, 0.3923, 0.3498, 0.2243, 0.4198, 0.2856, 0.2833};
  const ReductionReport r = reduction({labels, before}, {labels, cr});
  CHECK(std::abs(r.reduction_percent - 77.13) <= 0.01);
  const double mean_before = std::accumulate(before.begin(), before.end(), 0.0) / 14.0;
  const double mean_after = std::accumulate(cr.begin(), cr.end(), 0.0) / 14.0;
  CHECK(r.reduction_percent == doctest::Approx(100.0 * (1.0 - mean_after / mean_before)).epsilon(1e-12));
}

TEST_CASE("snr: zero noise is +inf") {
  std::vector<double> x(2500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i % 250) / 250.0);
  const SnrReport s = snr(Recording(250.0, {{"C3", x}}), 1.0);
  CHECK(s.global == std::numeric_limits<double>::infinity());
  REQUIRE(s.per_trial.size() == 1);
  CHECK(s.per_trial[0] == std::numeric_limits<double>::infinity());
}

TEST_CASE("snr: white noise scales like 1 / (epochs - 1) and decreases with epochs") {
  double prev = 1e300;
  for (std::size_t epochs : {10u, 40u, 160u}) {
    const SnrReport s = snr(Recording(100.0, {{"C3", noise(epochs * 100, 3 + epochs)}}), 1.0);
    const double expected = 1.0 / (static_cast<double>(epochs) - 1.0);
    CHECK(s.global == doctest::Approx(expected).epsilon(0.25));
    CHECK(s.global < prev);
    prev = s.global;
  }
}

TEST_CASE("snr: Monte-Carlo template plus noise of known variance") {
  const std::size_t epochs = 200, len = 250;
  std::vector<double> tmpl(len);
  double power = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    tmpl[i] = 0.8 * std::sin(2.0 * std::numbers::pi * 3.0 * static_cast<double>(i) / 250.0) + 0.3;
    power += tmpl[i] * tmpl[i];
  }
  power /= static_cast<double>(len);
  const double sigma = 0.9;
  const auto n1 = noise(epochs * len, 11, sigma);
  const auto n2 = noise(epochs * len, 12, sigma);
  std::vector<double> a(epochs * len), b(epochs * len);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = tmpl[i % len] + n1[i];
    b[i] = tmpl[i % len] + n2[i];
  }
  const SnrReport s = snr(Recording(250.0, {{"C3", a}, {"C4", b}}), 1.0);
  CHECK(s.global == doctest::Approx(power / (sigma * sigma)).epsilon(0.1));

  // ratio scale invariance and EOG exclusion
  std::vector<double> scaled(a.size());
  std::transform(a.begin(), a.end(), scaled.begin(), [](double v) { return -3.0 * v; });
  const double base = snr(Recording(250.0, {{"C3", a}}), 1.0).global;
  CHECK(snr(Recording(250.0, {{"C3", scaled}}), 1.0).global == doctest::Approx(base).epsilon(1e-12));
  CHECK(snr(Recording(250.0, {{"C3", a}, {"EOG", noise(a.size(), 99, 50.0)}}, 1), 1.0).global ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("snr: per-trial values and pooled global") {
  const std::size_t len = 100;
  std::vector<double> x(3000);
  const auto n = noise(x.size(), 5, 0.5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(static_cast<double>(i % len) * 0.2) + n[i];
  const Recording rec(100.0, {{"C3", x}}, std::nullopt, std::nullopt, {{0, 1000}, {1200, 2500}});
  const SnrReport s = snr(rec, 1.0);
  CHECK(s.per_trial.size() == 2);
  CHECK(s.epoch_len_s == 1.0);
  // Trial 1 has 10 epochs, trial 2 has 13: pooled is its own computation over 23 epochs.
  std::vector<double> pooled(x.begin(), x.begin() + 1000);
  pooled.insert(pooled.end(), x.begin() + 1200, x.begin() + 2500);
  CHECK(s.global == doctest::Approx(snr(Recording(100.0, {{"C3", pooled}}), 1.0).global).epsilon(1e-12));

  CHECK_THROWS_AS(snr(rec, 0.01), ArgumentError);
  CHECK_THROWS_AS(snr(Recording(100.0, {{"C3", std::vector<double>(150, 1.0)}}), 1.0), ArgumentError);
}

TEST_CASE("amari index") {
  CHECK(amari_index_of(Eigen::MatrixXd::Identity(4, 4)) == 0.0);
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(3, 3);
  perm(0, 2) = -2.0;
  perm(1, 0) = 0.5;
  perm(2, 1) = 3.0;
  CHECK(amari_index_of(perm) == doctest::Approx(0.0));
  // all-ones, n = 2: each row and column contributes 2/1 - 1 = 1; 4 / (2*2*1) = 1.
  CHECK(amari_index_of(Eigen::MatrixXd::Ones(2, 2)) == doctest::Approx(1.0));

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a(4, 4), b(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) {
      a(i / 4, i % 4) = rng.normal();
      b(i / 4, i % 4) = rng.normal();
    }
    CHECK(amari_index(a.inverse(), a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    const double v = amari_index(b, a);
    CHECK(v == doctest::Approx(amari_loops(b * a)).epsilon(1e-12));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(amari_index(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Identity(2, 2)), DegeneracyError);
  CHECK_THROWS_AS(amari_index(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)), ArgumentError);
}

TEST_CASE("partial amari index ignores the excluded source") {
  Rng rng(4);
  Eigen::MatrixXd a(4, 4);
  for (Eigen::Index i = 0; i < 16; ++i) a(i / 4, i % 4) = rng.normal();
  // An estimate exact for sources 0..2 but mixing source 3 into one row.
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(4, 4);
  p(3, 0) = 0.7;
  p(3, 1) = -0.4;
  const Eigen::MatrixXd est = p * a.inverse();
  CHECK(amari_index(est, a) > 0.05);
  CHECK(partial_amari_index(est, a, 3) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  CHECK(partial_amari_index(est, a, 0) > 0.0);
  CHECK_THROWS_AS(partial_amari_index(est, a, 4), ArgumentError);
}

TEST_CASE("report serialization") {
  const ReductionReport r = reduction(ChannelCc{{"a"}, {2.0}}, ChannelCc{{"a"}, {1.0}});
  CHECK(to_json(r).at("reduction_percent") == 50.0);
  CHECK(to_csv(r).find("a,2,1") != std::string::npos);
  const SnrReport s{1.0, {0.5, std::numeric_limits<double>::infinity()}, 0.75};
  const auto j = to_json(s);
  CHECK(j.at("per_trial")[1] == "inf");
  CHECK(to_csv(s).find("inf") != std::string::npos);
}
