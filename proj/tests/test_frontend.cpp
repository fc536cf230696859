#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stylever/corpus.hpp"
#include "stylever/error.hpp"
#include "stylever/lpc.hpp"
#include "stylever/prosody.hpp"
#include "support.hpp"

using namespace stylever;
using stylever::testing::sine;

namespace {

AudioClip clip_of(std::vector<double> s) {
  AudioClip c;
  c.samples = std::move(s);
  return c;
}

Frame frame_of(std::initializer_list<double> v) {
  Frame f;
  f.samples = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
  return f;
}

}  // namespace

TEST_CASE("frame counts") {
  const FrameConfig cfg;
  CHECK(cfg.frame_length() == 256);
  CHECK(cfg.hop() == 112);
  CHECK(frame_signal(clip_of(std::vector<double>(1024, 0.1)), cfg).size() == 7);
  CHECK(frame_signal(clip_of(std::vector<double>(256, 0.1)), cfg).size() == 1);
  CHECK_THROWS_WITH_AS(frame_signal(clip_of(std::vector<double>(255, 0.1)), cfg),
                       doctest::Contains("utterance too short"), Error);
  const auto frames = frame_signal(clip_of(std::vector<double>(1024, 0.1)), cfg);
  CHECK(frames[3].start_index == 336);
}

TEST_CASE("hamming window") {
  Frame ones;
  ones.samples = Eigen::VectorXd::Ones(257);
  const Frame w = apply_hamming(ones);
  CHECK(w.samples(0) == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(w.samples(128) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.samples(256) == doctest::Approx(0.08).epsilon(1e-12));

  Frame zeros;
  zeros.samples = Eigen::VectorXd::Zero(256);
  CHECK(apply_hamming(zeros).samples.isZero(0));
}

TEST_CASE("autocorrelation") {
  const auto r = autocorrelate(frame_of({1, 1, 1, 1}).samples, 1);
  CHECK(r(0) == 4.0);
  CHECK(r(1) == 3.0);
  CHECK(autocorrelate(Eigen::VectorXd::Zero(32), 4).isZero(0));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(64);
    for (auto& v : x) v = g(rng);
    const auto rr = autocorrelate(x, 16);
    for (int k = 0; k <= 16; ++k) {
      double direct = 0;
      for (int n = 0; n + k < 64; ++n) direct += x(n) * x(n + k);
      REQUIRE(rr(k) == doctest::Approx(direct).epsilon(1e-12));
      REQUIRE(rr(0) >= std::abs(rr(k)));
    }
  }
}

TEST_CASE("levinson-durbin small cases") {
  Eigen::Vector2d r1(1.0, 0.5);
  const auto l1 = levinson_durbin(r1, 1);
  CHECK(l1.a(0) == doctest::Approx(0.5));
  CHECK(l1.gain_sq == doctest::Approx(0.75));

  Eigen::Vector3d r2(1.0, 0.5, 0.25);
  const auto l2 = levinson_durbin(r2, 2);
  CHECK(l2.a(0) == doctest::Approx(0.5));
  CHECK(std::abs(l2.a(1)) < 1e-15);

  CHECK_THROWS_AS(levinson_durbin(Eigen::Vector3d(0, 0, 0), 2), DegenerateFrame);
  CHECK_THROWS_AS(levinson_durbin(Eigen::Vector3d(-1, 0, 0), 2), DegenerateFrame);
}

TEST_CASE("levinson-durbin matches a dense Toeplitz solve") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd r = stylever::testing::random_autocorrelation(rng, 16);
    const auto lpc = levinson_durbin(r, 16);
    const Eigen::VectorXd oracle = stylever::testing::toeplitz_solve(r, 16);
    REQUIRE((lpc.a - oracle).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("lpc cepstrum") {
  CHECK(lpc_to_lpcc(Eigen::VectorXd::Constant(1, 0.5), 1)(0) == doctest::Approx(0.5));
  const auto c = lpc_to_lpcc(Eigen::Vector2d(0.5, 0.0), 2);
  CHECK(c(0) == doctest::Approx(0.5));
  CHECK(c(1) == doctest::Approx(0.125));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd a = stylever::testing::random_stable_lpc(rng, 16);
    const Eigen::VectorXd cc = lpc_to_lpcc(a, 16);
    const Eigen::VectorXd oracle = stylever::testing::log_series_cepstrum(a, 16);
    REQUIRE((cc - oracle).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("extract observations") {
  std::vector<double> vowel(16000, 0.0);
  for (int h = 1; h <= 20; ++h) {
    const auto part = sine(120.0 * h, 0.1 / h, 16000);
    for (int i = 0; i < 16000; ++i) vowel[i] += part[i];
  }
  const auto obs = extract_observations(clip_of(vowel));
  CHECK(obs.length() + static_cast<Eigen::Index>(obs.skipped_frames) == 141);
  CHECK(obs.dim() == 16);
  CHECK(obs.frame_starts.size() == static_cast<std::size_t>(obs.length()));

  CHECK_THROWS_WITH_AS(extract_observations(clip_of(std::vector<double>(8000, 0.0))),
                       doctest::Contains("no usable frames"), Error);

  // Silence inside speech is skipped, not fatal.
  auto gapped = vowel;
  std::fill(gapped.begin() + 4000, gapped.begin() + 6000, 0.0);
  const auto g = extract_observations(clip_of(gapped));
  CHECK(g.skipped_frames > 0);
  CHECK(g.length() + static_cast<Eigen::Index>(g.skipped_frames) == 141);

  std::ostringstream dump;
  write_feature_dump(dump, obs);
  std::istringstream first(dump.str().substr(0, dump.str().find('\n')));
  double v;
  int fields = 0;
  while (first >> v) ++fields;
  CHECK(fields == 17);
}

TEST_CASE("AR(2) coefficients are recovered by the frame analysis") {
  const double a1 = 1.3, a2 = -0.6;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<double> x(64000, 0.0);
  for (std::size_t n = 2; n < x.size(); ++n) x[n] = a1 * x[n - 1] + a2 * x[n - 2] + g(rng);

  const FrameConfig cfg;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(16);
  int used = 0;
  for (const auto& f : frame_signal(clip_of(x), cfg)) {
    const auto lpc = levinson_durbin(autocorrelate(apply_hamming(f).samples, 16), 16);
    sum += lpc.a;
    ++used;
  }
  const Eigen::VectorXd mean = sum / used;
  CHECK(std::abs(mean(0) - a1) / std::abs(a1) < 0.05);
  CHECK(std::abs(mean(1) - a2) / std::abs(a2) < 0.05);
}

TEST_CASE("F0 of sinusoids") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> phase(0.0, 6.28);
  for (double f = 60.0; f <= 400.0; f += 3.7) {
    const auto s = sine(f, 0.5, 512, 16000, phase(rng));
    const Eigen::Map<const Eigen::VectorXd> w(s.data(), 512);
    const double est = estimate_f0(w, 16000);
    INFO("f = " << f << " estimate = " << est);
    REQUIRE(std::abs(est - f) <= 1.0);
  }
  const auto s = sine(100.0, 1.0, 512);
  const double est = estimate_f0(Eigen::Map<const Eigen::VectorXd>(s.data(), 512), 16000);
  CHECK(est >= 99.0);
  CHECK(est <= 101.0);
}

TEST_CASE("F0 unvoiced cases") {
  CHECK(estimate_f0(Eigen::VectorXd::Zero(512), 16000) == 0.0);
  int unvoiced = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd noise(512);
    for (auto& v : noise) v = g(rng);
    unvoiced += estimate_f0(noise, 16000) == 0.0;
  }
  CHECK(unvoiced >= 90);
}

TEST_CASE("frame energy") {
  CHECK(frame_energy_db(Eigen::VectorXd::Ones(256)) == doctest::Approx(0.0));
  const auto s = sine(125.0, 1.0, 256);  // two whole periods
  CHECK(frame_energy_db(Eigen::Map<const Eigen::VectorXd>(s.data(), 256)) ==
        doctest::Approx(-3.0103).epsilon(1e-4));
  CHECK(frame_energy_db(Eigen::VectorXd::Zero(256)) == -120.0);
}

TEST_CASE("prosodic vectors") {
  // 10 acoustic frames of a unit 100 Hz sine: 256 + 9 * 112 samples, plus
  // room for the pitch window.
  const AudioClip clip = clip_of(sine(100.0, 1.0, 2000));
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < 10; ++i) starts.push_back(i * 112);
  const auto seq = build_prosodic_sequence(clip, starts, {{0, 10}});
  REQUIRE(seq.size() == 1);
  CHECK(seq[0].voicing_fraction == 1.0);
  CHECK(seq[0].mean_f0_hz == doctest::Approx(100.0).epsilon(0.01));
  CHECK(seq[0].mean_energy_db == doctest::Approx(-3.01).epsilon(0.08));
  CHECK(seq[0].log_duration == doctest::Approx(std::log(10.0)));

  const AudioClip silent = clip_of(std::vector<double>(2000, 0.0));
  const auto quiet = build_prosodic_sequence(silent, starts, {{0, 6}, {6, 10}});
  REQUIRE(quiet.size() == 2);
  CHECK(quiet[0].voicing_fraction == 0.0);
  CHECK(quiet[0].mean_f0_hz == 0.0);
  CHECK(quiet[0].mean_energy_db == -120.0);
  CHECK(quiet[0].log_duration == doctest::Approx(std::log(6.0)));
  CHECK(quiet[1].log_duration == doctest::Approx(std::log(4.0)));

  CHECK_THROWS_AS(build_prosodic_sequence(clip, starts, {{3, 3}}), Error);
  CHECK_THROWS_AS(build_prosodic_sequence(clip, starts, {{0, 5}, {4, 8}}), Error);
}

TEST_CASE("prosody is gain invariant except for energy") {
  const AudioClip base = synth_style_clip(Style::kHappy, 2, 9);
  const auto obs = extract_observations(base);
  const std::size_t t = obs.frame_starts.size();
  const std::vector<FrameRange> segs = {{0, t / 2}, {t / 2, t}};
  const auto ref = build_prosodic_sequence(base, obs.frame_starts, segs);
  for (double gain : {0.5, 0.125}) {
    AudioClip scaled = base;
    for (double& s : scaled.samples) s *= gain;
    const auto seq = build_prosodic_sequence(scaled, obs.frame_starts, segs);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      CHECK(seq[i].voicing_fraction == ref[i].voicing_fraction);
      CHECK(seq[i].mean_f0_hz == doctest::Approx(ref[i].mean_f0_hz).epsilon(1e-9));
      CHECK(seq[i].log_duration == ref[i].log_duration);
      CHECK(seq[i].mean_energy_db - ref[i].mean_energy_db ==
            doctest::Approx(20.0 * std::log10(gain)).epsilon(1e-9));
    }
  }
}

TEST_CASE("prosody dump") {
  std::ostringstream out;
  write_prosody_dump(out, {{1.0, 100.0, -3.0, std::log(10.0)}});
  CHECK(out.str().find("0,1.000000,100.000000,-3.000000,2.302585") != std::string::npos);
}
