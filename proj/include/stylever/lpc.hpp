#pragma once

// Acoustic front end: 16 ms frames with 9 ms overlap, Hamming window,
// autocorrelation-method LPC of order 16, converted to 16 LPC cepstra.
//
// Predictor convention: x̂[n] = Σ a_k x[n-k], A(z) = 1 - Σ a_k z^-k.
// No pre-emphasis, liftering or energy normalization is applied.

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "stylever/audio.hpp"
#include "stylever/error.hpp"

namespace stylever {

struct FrameConfig {
  int frame_ms = 16;
  int overlap_ms = 9;
  int lpc_order = 16;
  int n_ceps = 16;
  int sample_rate_hz = kCanonicalRate;

  int frame_length() const { return sample_rate_hz * frame_ms / 1000; }
  int hop() const { return sample_rate_hz * (frame_ms - overlap_ms) / 1000; }
  void validate() const;
};

// floor((L - frame_len) / hop) + 1, or 0 when L < frame_len.
std::size_t frame_count(std::size_t n_samples, const FrameConfig& cfg);

struct Frame {
  Eigen::VectorXd samples;
  std::size_t start_index = 0;
};

// Throws Error("utterance too short") when the clip holds less than a frame.
std::vector<Frame> frame_signal(const AudioClip& clip, const FrameConfig& cfg);

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Vec<Scalar> hamming_window(Eigen::Index length) {
  Vec<Scalar> w(length);
  if (length == 1) {
    w(0) = Scalar(1);
    return w;
  }
  const Scalar denom = Scalar(length - 1);
  for (Eigen::Index n = 0; n < length; ++n)
    w(n) = Scalar(0.54) -
           Scalar(0.46) * std::cos(Scalar(2) * std::numbers::pi_v<Scalar> *
                                   Scalar(n) / denom);
  return w;
}

Frame apply_hamming(Frame frame);

// r[k] = Σ_{n=0}^{L-1-k} x[n] x[n+k], k = 0..order.
template <typename Derived>
Vec<typename Derived::Scalar> autocorrelate(const Eigen::MatrixBase<Derived>& x,
                                            int order) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index len = x.size();
  if (order >= len) throw Error("autocorrelation order must be below frame length");
  Vec<Scalar> r(order + 1);
  for (int k = 0; k <= order; ++k)
    r(k) = x.head(len - k).dot(x.segment(k, len - k));
  return r;
}

template <typename Scalar>
struct LpcVector {
  Vec<Scalar> a;           // predictor coefficients a_1..a_p
  Vec<Scalar> reflection;  // k_1..k_p
  Scalar gain_sq = 0;      // final prediction error
};

// Levinson-Durbin recursion for the Toeplitz normal equations. Throws
// DegenerateFrame when r[0] <= 0 or the recursion loses positivity.
template <typename Derived>
LpcVector<typename Derived::Scalar> levinson_durbin(
    const Eigen::MatrixBase<Derived>& r, int order) {
  using Scalar = typename Derived::Scalar;
  if (r.size() < order + 1) throw Error("autocorrelation too short for LPC order");
  if (!(r(0) > Scalar(0)) || !std::isfinite(r(0))) throw DegenerateFrame();

  LpcVector<Scalar> out;
  out.a = Vec<Scalar>::Zero(order);
  out.reflection = Vec<Scalar>::Zero(order);
  Vec<Scalar> prev(order);
  Scalar err = r(0);
  for (int i = 1; i <= order; ++i) {
    Scalar acc = r(i);
    for (int j = 1; j < i; ++j) acc -= out.a(j - 1) * r(i - j);
    const Scalar k = acc / err;
    if (!std::isfinite(k) || std::abs(k) >= Scalar(1)) throw DegenerateFrame();
    prev.head(i - 1) = out.a.head(i - 1);
    for (int j = 1; j < i; ++j) out.a(j - 1) = prev(j - 1) - k * prev(i - j - 1);
    out.a(i - 1) = k;
    out.reflection(i - 1) = k;
    err *= Scalar(1) - k * k;
    if (!(err > Scalar(0))) throw DegenerateFrame();
  }
  out.gain_sq = err;
  return out;
}

// Cepstrum of the all-pole model 1/A(z):
// c_n = a_n + Σ_{k=1}^{n-1} (k/n) c_k a_{n-k}, with a_n = 0 for n > p.
template <typename Derived>
Vec<typename Derived::Scalar> lpc_to_lpcc(const Eigen::MatrixBase<Derived>& a,
                                          int n_ceps) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index p = a.size();
  auto coef = [&](Eigen::Index n) { return n <= p ? a(n - 1) : Scalar(0); };
  Vec<Scalar> c(n_ceps);
  for (int n = 1; n <= n_ceps; ++n) {
    Scalar acc = coef(n);
    for (int k = 1; k < n; ++k)
      acc += Scalar(k) / Scalar(n) * c(k - 1) * coef(n - k);
    c(n - 1) = acc;
  }
  return c;
}

// One LPCC vector per usable frame, stored column-wise (n_ceps x T).
struct ObservationSequence {
  Eigen::MatrixXd features;
  std::vector<std::size_t> frame_starts;
  std::size_t skipped_frames = 0;

  Eigen::Index length() const { return features.cols(); }
  Eigen::Index dim() const { return features.rows(); }
};

// frame -> window -> autocorrelate -> LPC -> LPCC. Degenerate frames are
// skipped and counted. Throws Error("no usable frames") if none survive.
ObservationSequence extract_observations(const AudioClip& clip,
                                         const FrameConfig& cfg = {});

// One line per frame: start sample then the cepstra, space separated.
void write_feature_dump(std::ostream& out, const ObservationSequence& obs);

}  // namespace stylever
