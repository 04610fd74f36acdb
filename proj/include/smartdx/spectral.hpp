#pragma once

// Welch power spectral density on short real segments. Segments are one
// second long, so the transform is a direct real DFT against a cached
// twiddle table rather than a power-of-two FFT (which would not land on
// integer-Hz bins).

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "smartdx/error.hpp"

namespace smartdx {

enum class WindowKind { hann, rectangular };

struct WelchConfig {
  std::size_t segment_length = 0;  ///< 0 selects round(fs), i.e. 1 Hz bins
  double overlap = 0.5;            ///< fraction of segment_length
  WindowKind window = WindowKind::hann;
  bool detrend_constant = true;
};

/// One-sided density spectrum. frequencies[k] = k * fs / segment_length.
struct Spectrum {
  std::vector<double> frequencies;
  std::vector<double> density;
  std::size_t segments = 0;

  double bin_width() const { return frequencies.size() > 1 ? frequencies[1] : 0.0; }
};

/// Periodic ("DFT-even") window, matching the usual spectral-analysis default.
inline std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::hann && n > 1) {
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n));
  }
  return w;
}

class WelchEstimator {
 public:
  /// `max_bin` limits the computed bins to [0, max_bin]; by default the full
  /// one-sided range up to Nyquist is computed.
  WelchEstimator(double fs, WelchConfig cfg,
                 std::size_t max_bin = std::numeric_limits<std::size_t>::max())
      : fs_(fs), cfg_(cfg) {
    if (!(fs > 0.0) || !std::isfinite(fs)) throw NumericError("welch: sampling rate must be positive");
    nseg_ = cfg_.segment_length ? cfg_.segment_length
                                : static_cast<std::size_t>(std::llround(fs));
    if (nseg_ < 2) throw NumericError("welch: segment length must be at least 2");
    if (!(cfg_.overlap >= 0.0 && cfg_.overlap < 1.0))
      throw NumericError("welch: overlap must be in [0, 1)");
    const std::size_t noverlap =
        static_cast<std::size_t>(std::floor(static_cast<double>(nseg_) * cfg_.overlap));
    step_ = nseg_ - noverlap;
    nbins_ = std::min(nseg_ / 2, max_bin) + 1;
    window_ = make_window(cfg_.window, nseg_);
    double power = 0.0;
    for (double w : window_) power += w * w;
    scale_ = 1.0 / (fs_ * power);
    cos_.resize(nseg_);
    sin_.resize(nseg_);
    for (std::size_t i = 0; i < nseg_; ++i) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nseg_);
      cos_[i] = std::cos(phase);
      sin_[i] = std::sin(phase);
    }
  }

  std::size_t segment_length() const { return nseg_; }

  Spectrum estimate(std::span<const double> x) const {
    if (x.size() < nseg_)
      throw NumericError("welch: signal of " + std::to_string(x.size()) +
                         " samples is shorter than one segment of " + std::to_string(nseg_));
    for (double v : x)
      if (!std::isfinite(v)) throw NumericError("welch: non-finite sample");

    Spectrum out;
    out.frequencies.resize(nbins_);
    out.density.assign(nbins_, 0.0);
    for (std::size_t k = 0; k < nbins_; ++k)
      out.frequencies[k] = static_cast<double>(k) * fs_ / static_cast<double>(nseg_);

    std::vector<double> seg(nseg_);
    for (std::size_t start = 0; start + nseg_ <= x.size(); start += step_) {
      double mean = 0.0;
      if (cfg_.detrend_constant) {
        for (std::size_t i = 0; i < nseg_; ++i) mean += x[start + i];
        mean /= static_cast<double>(nseg_);
      }
      for (std::size_t i = 0; i < nseg_; ++i) seg[i] = (x[start + i] - mean) * window_[i];
      for (std::size_t k = 0; k < nbins_; ++k) {
        double re = 0.0, im = 0.0;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < nseg_; ++i) {
          re += seg[i] * cos_[idx];
          im -= seg[i] * sin_[idx];
          idx += k;
          if (idx >= nseg_) idx -= nseg_;
        }
        double p = (re * re + im * im) * scale_;
        const bool nyquist = (nseg_ % 2 == 0) && k == nseg_ / 2;
        if (k != 0 && !nyquist) p *= 2.0;
        out.density[k] += p;
      }
      ++out.segments;
    }
    for (double& d : out.density) d /= static_cast<double>(out.segments);
    return out;
  }

 private:
  double fs_;
  WelchConfig cfg_;
  std::size_t nseg_ = 0;
  std::size_t step_ = 1;
  std::size_t nbins_ = 0;
  std::vector<double> window_;
  std::vector<double> cos_, sin_;
  double scale_ = 1.0;
};

inline Spectrum welch_psd(std::span<const double> x, double fs, const WelchConfig& cfg = {}) {
  return WelchEstimator(fs, cfg).estimate(x);
}

inline constexpr std::size_t kPsdBins = 19;
inline constexpr double kPsdFloor = 1e-12;

/// log10 PSD at 1..19 Hz (bin 0 and everything from 20 Hz up are dropped),
/// floored at 1e-12 so silent channels stay finite.
inline std::vector<double> welch_log_psd(std::span<const double> x, double fs,
                                         const WelchConfig& cfg = {}) {
  if (fs < 40.0) throw NumericError("welch_log_psd: sampling rate must be at least 40 Hz");
  const auto spec = WelchEstimator(fs, cfg, kPsdBins).estimate(x);
  std::vector<double> out(kPsdBins);
  for (std::size_t k = 1; k <= kPsdBins; ++k)
    out[k - 1] = std::log10(std::max(spec.density[k], kPsdFloor));
  return out;
}

}  // namespace smartdx
