#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "eogclean/core.hpp"
#include "json.hpp"

namespace eogclean::dsp {

enum class FirKind { lowpass, highpass };

struct FirDesign {
  FirKind kind = FirKind::lowpass;
  double cutoff_hz = 0.0;
  double sample_rate = 0.0;
  std::size_t order = 0;
};

/// Linear-phase FIR; taps.size() == design.order + 1 and taps are symmetric.
struct FirFilter {
  std::vector<double> taps;
  FirDesign design;

  std::size_t order() const { return design.order; }
};

/// One second-order section, a0 normalized to 1, direct form II transposed.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct BandstopDesign {
  double low_hz = 49.0;
  double high_hz = 51.0;
  int order = 4;
  double sample_rate = 0.0;
};

struct IirBandstop {
  std::vector<Biquad> sections;
  BandstopDesign design;

  std::size_t order() const { return static_cast<std::size_t>(design.order); }
  std::vector<std::complex<double>> poles() const;
};

using Filter = std::variant<FirFilter, IirBandstop>;

/// Polyphase rational resampler. The rates must reduce to an integer ratio
/// (e.g. 2048 -> 250 is 125/1024). An internal Kaiser-windowed sinc keeps the
/// passband flat up to 0.8 of the lower Nyquist frequency and reaches its
/// stopband at that Nyquist frequency. Each polyphase branch is normalized to
/// unit sum so constants are reproduced exactly away from the edges.
std::vector<double> resample(std::span<const double> signal, double from_rate, double to_rate);

/// Order floor(3 * fs / fc); least-squares fit to the brick-wall response on
/// a uniform grid of 16 * (order + 1) frequencies, then Hamming windowed and
/// scaled to unit gain at DC (lowpass) or Nyquist (highpass). A highpass
/// whose formula order is odd is raised by one, since a symmetric odd-order
/// filter has a forced zero at Nyquist.
FirFilter design_fir(FirKind kind, double sample_rate, double cutoff_hz);

/// Unwindowed least-squares prototype on the 16 * (order + 1) point grid.
/// `cutoff_rad` is in radians/sample.
std::vector<double> ls_fir_prototype(FirKind kind, std::size_t order, double cutoff_rad);

/// Butterworth band-stop of total `order` (even), as order/2 biquads.
IirBandstop design_bandstop(double sample_rate, double low_hz, double high_hz, int order = 4);

std::complex<double> frequency_response(const FirFilter& filter, double hz);
std::complex<double> frequency_response(const IirBandstop& filter, double hz);

/// Single causal pass (zero initial state for FIR, zero state for IIR).
std::vector<double> filter_forward(std::span<const double> signal, const FirFilter& filter);
std::vector<double> filter_forward(std::span<const double> signal, const IirBandstop& filter);

/// Forward-backward filtering with odd reflection padding of 3 * order
/// samples on each side, trimmed afterwards. IIR passes start from the
/// steady-state section states scaled to the first padded sample.
/// Throws ArgumentError if the signal is not longer than 3 * order.
std::vector<double> apply_zero_phase(std::span<const double> signal, const FirFilter& filter);
std::vector<double> apply_zero_phase(std::span<const double> signal, const IirBandstop& filter);
std::vector<double> apply_zero_phase(std::span<const double> signal, const Filter& filter);

struct FilterChainConfig {
  double target_rate = 250.0;
  double highpass_hz = 1.0;
  double lowpass_hz = 47.0;
  double bandstop_low_hz = 49.0;
  double bandstop_high_hz = 51.0;
  int bandstop_order = 4;
};

/// Resample every channel to the target rate, then highpass, lowpass and
/// band-stop the EEG and EOG channels with zero phase. The trigger channel
/// is only resampled.
Recording preprocess(const Recording& recording, const FilterChainConfig& config = {});

nlohmann::json to_json(const FirFilter& filter);
nlohmann::json to_json(const IirBandstop& filter);

}  // namespace eogclean::dsp
