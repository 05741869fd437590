#include "eogclean/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "eogclean/errors.hpp"

namespace eogclean::dsp {
namespace {

constexpr double kPi = std::numbers::pi;

struct Ratio {
  std::int64_t up = 1;
  std::int64_t down = 1;
};

Ratio reduce_rates(double from_rate, double to_rate) {
  for (double scale = 1.0; scale <= 1e6; scale *= 10.0) {
    const double a = from_rate * scale;
    const double b = to_rate * scale;
    if (std::abs(a - std::round(a)) < 1e-9 * a && std::abs(b - std::round(b)) < 1e-9 * b) {
      const auto from = static_cast<std::int64_t>(std::llround(a));
      const auto to = static_cast<std::int64_t>(std::llround(b));
      const std::int64_t g = std::gcd(from, to);
      Ratio r{to / g, from / g};
      if (r.up > 1'000'000 || r.down > 1'000'000) break;
      return r;
    }
  }
  throw ArgumentError("resample: rates do not reduce to a usable integer ratio");
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Anti-alias prototype at the upsampled rate, split into unit-sum phases.
std::vector<double> resampler_taps(const Ratio& ratio, double from_rate, double to_rate) {
  const double upsampled_rate = from_rate * static_cast<double>(ratio.up);
  const double nyquist = 0.5 * std::min(from_rate, to_rate);
  const double cutoff = 0.9 * nyquist;
  const double transition = 0.2 * nyquist;

  constexpr double kAttenuationDb = 80.0;
  const double beta = 0.1102 * (kAttenuationDb - 8.7);
  const double dw = 2.0 * kPi * transition / upsampled_rate;
  auto length = static_cast<std::size_t>(std::ceil((kAttenuationDb - 7.95) / (2.285 * dw))) + 1;
  length = std::max<std::size_t>(length, 2 * static_cast<std::size_t>(ratio.up) + 1);
  if (length % 2 == 0) ++length;

  const double fc = cutoff / upsampled_rate;  // cycles/sample
  const double center = 0.5 * static_cast<double>(length - 1);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double r = (static_cast<double>(n) - center) / center;
    const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[n] = 2.0 * fc * sinc(2.0 * fc * (static_cast<double>(n) - center)) * window;
  }

  const auto up = static_cast<std::size_t>(ratio.up);
  for (std::size_t phase = 0; phase < up; ++phase) {
    double sum = 0.0;
    for (std::size_t n = phase; n < length; n += up) sum += h[n];
    for (std::size_t n = phase; n < length; n += up) h[n] /= sum;
  }
  return h;
}

std::vector<double> odd_reflect_pad(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[pad - 1 - i] = 2.0 * x[0] - x[i + 1];
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  return ext;
}

void check_padding(std::size_t length, std::size_t order) {
  if (order == 0 || length <= 3 * order) {
    throw ArgumentError("apply_zero_phase: signal of " + std::to_string(length) +
                        " samples is too short for a padding of " + std::to_string(3 * order));
  }
}

struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

std::vector<SectionState> steady_state(const IirBandstop& filter, double input) {
  std::vector<SectionState> states;
  double u = input;
  for (const auto& s : filter.sections) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    SectionState st;
    st.z2 = (s.b2 - s.a2 * gain) * u;
    st.z1 = (s.b1 - s.a1 * gain) * u + st.z2;
    states.push_back(st);
    u *= gain;
  }
  return states;
}

void run_sections(std::vector<double>& x, const IirBandstop& filter, std::vector<SectionState> states) {
  for (std::size_t k = 0; k < filter.sections.size(); ++k) {
    const Biquad& s = filter.sections[k];
    SectionState st = states[k];
    for (double& v : x) {
      const double y = s.b0 * v + st.z1;
      st.z1 = s.b1 * v - s.a1 * y + st.z2;
      st.z2 = s.b2 * v - s.a2 * y;
      v = y;
    }
  }
}

std::vector<double> convolve_causal(std::span<const double> x, std::span<const double> taps) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t kmax = std::min(taps.size() - 1, i);
    double acc = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) acc += taps[k] * x[i - k];
    y[i] = acc;
  }
  return y;
}

}  // namespace

std::vector<double> resample(std::span<const double> signal, double from_rate, double to_rate) {
  if (!(from_rate > 0.0) || !(to_rate > 0.0)) {
    throw ArgumentError("resample: rates must be positive");
  }
  const Ratio ratio = reduce_rates(from_rate, to_rate);
  if (ratio.up == ratio.down) return {signal.begin(), signal.end()};

  const std::vector<double> h = resampler_taps(ratio, from_rate, to_rate);
  const auto up = ratio.up;
  const auto down = ratio.down;
  const auto n_in = static_cast<std::int64_t>(signal.size());
  const std::int64_t n_out = (n_in * up + down / 2) / down;
  const auto taps = static_cast<std::int64_t>(h.size());
  const std::int64_t delay = (taps - 1) / 2;

  std::vector<double> out(static_cast<std::size_t>(n_out));
  for (std::int64_t j = 0; j < n_out; ++j) {
    const std::int64_t t = j * down + delay;
    const std::int64_t k_hi = std::min(t / up, n_in - 1);
    const std::int64_t lo_num = t - (taps - 1);
    const std::int64_t k_lo = lo_num <= 0 ? 0 : (lo_num + up - 1) / up;
    double acc = 0.0;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
      acc += signal[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(t - k * up)];
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

std::vector<double> ls_fir_prototype(FirKind kind, std::size_t order, double cutoff_rad) {
  const std::size_t grid = 16 * (order + 1);
  const double k_grid = static_cast<double>(grid);
  std::vector<double> desired(grid);
  std::vector<double> omega(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    omega[i] = kPi * (static_cast<double>(i) + 0.5) / k_grid;
    const bool pass = kind == FirKind::lowpass ? omega[i] < cutoff_rad : omega[i] > cutoff_rad;
    desired[i] = pass ? 1.0 : 0.0;
  }

  // On the midpoint grid the cosine bases are orthogonal (DCT-II for even
  // orders, DCT-IV for odd), so the normal equations are diagonal.
  std::vector<double> h(order + 1, 0.0);
  if (order % 2 == 0) {
    const std::size_t half = order / 2;
    for (std::size_t k = 0; k <= half; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < grid; ++i) acc += desired[i] * std::cos(static_cast<double>(k) * omega[i]);
      const double a = (k == 0 ? 1.0 : 2.0) * acc / k_grid;
      if (k == 0) {
        h[half] = a;
      } else {
        h[half - k] = 0.5 * a;
        h[half + k] = 0.5 * a;
      }
    }
  } else {
    const std::size_t half = (order + 1) / 2;
    for (std::size_t k = 1; k <= half; ++k) {
      const double freq = static_cast<double>(k) - 0.5;
      double acc = 0.0;
      for (std::size_t i = 0; i < grid; ++i) acc += desired[i] * std::cos(freq * omega[i]);
      const double b = 2.0 * acc / k_grid;
      h[half - k] = 0.5 * b;
      h[half - 1 + k] = 0.5 * b;
    }
  }
  return h;
}

FirFilter design_fir(FirKind kind, double sample_rate, double cutoff_hz) {
  if (!(sample_rate > 0.0)) throw ArgumentError("design_fir: sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate)) {
    throw ArgumentError("design_fir: cutoff must lie strictly between 0 and Nyquist");
  }
  auto order = static_cast<std::size_t>(std::floor(3.0 * sample_rate / cutoff_hz));
  if (kind == FirKind::highpass && order % 2 == 1) ++order;

  std::vector<double> taps = ls_fir_prototype(kind, order, 2.0 * kPi * cutoff_hz / sample_rate);
  for (std::size_t n = 0; n <= order; ++n) {
    taps[n] *= 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(order));
  }

  double gain = 0.0;
  for (std::size_t n = 0; n <= order; ++n) {
    gain += kind == FirKind::lowpass ? taps[n] : (n % 2 == 0 ? taps[n] : -taps[n]);
  }
  for (double& t : taps) t /= gain;
  // Enforce exact symmetry against rounding in the scaling above.
  for (std::size_t n = 0; n < (order + 1) / 2; ++n) {
    const double avg = 0.5 * (taps[n] + taps[order - n]);
    taps[n] = avg;
    taps[order - n] = avg;
  }

  return FirFilter{std::move(taps), FirDesign{kind, cutoff_hz, sample_rate, order}};
}

IirBandstop design_bandstop(double sample_rate, double low_hz, double high_hz, int order) {
  const double nyquist = 0.5 * sample_rate;
  if (!(sample_rate > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < nyquist)) {
    throw ArgumentError("design_bandstop: need 0 < low < high < Nyquist");
  }
  if (order < 2 || order % 2 != 0) throw ArgumentError("design_bandstop: order must be even and >= 2");

  using cplx = std::complex<double>;
  const double fs2 = 2.0 * sample_rate;
  const double w_low = fs2 * std::tan(kPi * low_hz / sample_rate);
  const double w_high = fs2 * std::tan(kPi * high_hz / sample_rate);
  const double bandwidth = w_high - w_low;
  const double w0_sq = w_low * w_high;
  const int proto_order = order / 2;

  std::vector<cplx> digital;
  for (int k = 1; k <= proto_order; ++k) {
    const cplx p = std::polar(1.0, kPi * (2.0 * k + proto_order - 1.0) / (2.0 * proto_order));
    const cplx t = 0.5 * bandwidth / p;
    const cplx d = std::sqrt(t * t - w0_sq);
    for (const cplx s : {t + d, t - d}) digital.push_back((fs2 + s) / (fs2 - s));
  }

  const double notch = 2.0 * std::atan(std::sqrt(w0_sq) / fs2);
  const double zero_b1 = -2.0 * std::cos(notch);

  std::vector<cplx> upper;
  std::vector<double> real;
  for (const cplx& z : digital) {
    if (std::abs(z) >= 1.0) throw InternalError("design_bandstop: unstable pole");
    if (z.imag() > 1e-12) {
      upper.push_back(z);
    } else if (std::abs(z.imag()) <= 1e-12) {
      real.push_back(z.real());
    }
  }
  std::sort(real.begin(), real.end());
  std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });

  IirBandstop filter;
  filter.design = BandstopDesign{low_hz, high_hz, order, sample_rate};
  auto add_section = [&](double a1, double a2) {
    const double g = (1.0 + a1 + a2) / (2.0 + zero_b1);
    filter.sections.push_back(Biquad{g, g * zero_b1, g, a1, a2});
  };
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    add_section(-(real[i] + real[i + 1]), real[i] * real[i + 1]);
  }
  for (const cplx& z : upper) add_section(-2.0 * z.real(), std::norm(z));

  if (filter.sections.size() != static_cast<std::size_t>(proto_order)) {
    throw InternalError("design_bandstop: could not pair poles into sections");
  }
  return filter;
}

std::vector<std::complex<double>> IirBandstop::poles() const {
  std::vector<std::complex<double>> out;
  for (const auto& s : sections) {
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    out.push_back(0.5 * (-s.a1 + disc));
    out.push_back(0.5 * (-s.a1 - disc));
  }
  return out;
}

std::complex<double> frequency_response(const FirFilter& filter, double hz) {
  const double w = 2.0 * kPi * hz / filter.design.sample_rate;
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < filter.taps.size(); ++n) {
    acc += filter.taps[n] * std::polar(1.0, -w * static_cast<double>(n));
  }
  return acc;
}

std::complex<double> frequency_response(const IirBandstop& filter, double hz) {
  const double w = 2.0 * kPi * hz / filter.design.sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& s : filter.sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

std::vector<double> filter_forward(std::span<const double> signal, const FirFilter& filter) {
  return convolve_causal(signal, filter.taps);
}

std::vector<double> filter_forward(std::span<const double> signal, const IirBandstop& filter) {
  std::vector<double> y(signal.begin(), signal.end());
  run_sections(y, filter, std::vector<SectionState>(filter.sections.size()));
  return y;
}

std::vector<double> apply_zero_phase(std::span<const double> signal, const FirFilter& filter) {
  const std::size_t order = filter.order();
  check_padding(signal.size(), order);
  const std::size_t pad = 3 * order;

  std::vector<double> ext = odd_reflect_pad(signal, pad);
  ext = convolve_causal(ext, filter.taps);
  std::reverse(ext.begin(), ext.end());
  ext = convolve_causal(ext, filter.taps);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.end() - static_cast<std::ptrdiff_t>(pad)};
}

std::vector<double> apply_zero_phase(std::span<const double> signal, const IirBandstop& filter) {
  const std::size_t order = filter.order();
  check_padding(signal.size(), order);
  const std::size_t pad = 3 * order;

  std::vector<double> ext = odd_reflect_pad(signal, pad);
  run_sections(ext, filter, steady_state(filter, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_sections(ext, filter, steady_state(filter, ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.end() - static_cast<std::ptrdiff_t>(pad)};
}

std::vector<double> apply_zero_phase(std::span<const double> signal, const Filter& filter) {
  return std::visit([&](const auto& f) { return apply_zero_phase(signal, f); }, filter);
}

Recording preprocess(const Recording& recording, const FilterChainConfig& config) {
  const double from = recording.sample_rate();
  const double to = config.target_rate;

  const FirFilter highpass = design_fir(FirKind::highpass, to, config.highpass_hz);
  const FirFilter lowpass = design_fir(FirKind::lowpass, to, config.lowpass_hz);
  const IirBandstop bandstop =
      design_bandstop(to, config.bandstop_low_hz, config.bandstop_high_hz, config.bandstop_order);

  std::vector<Channel> channels;
  channels.reserve(recording.channel_count());
  for (std::size_t i = 0; i < recording.channel_count(); ++i) {
    const Channel& ch = recording.channel(i);
    std::vector<double> x = resample(ch.samples, from, to);
    if (i != recording.trigger_index()) {
      x = apply_zero_phase(x, highpass);
      x = apply_zero_phase(x, lowpass);
      x = apply_zero_phase(x, bandstop);
    }
    channels.push_back(Channel{ch.label, std::move(x)});
  }

  const std::size_t new_length = channels.empty() ? 0 : channels.front().samples.size();
  std::vector<Interval> bounds;
  for (const auto& b : recording.trial_bounds()) {
    auto scale = [&](std::size_t s) {
      return std::min<std::size_t>(new_length, static_cast<std::size_t>(std::llround(static_cast<double>(s) * to / from)));
    };
    const Interval scaled{scale(b.start), scale(b.end)};
    if (scaled.start < scaled.end) bounds.push_back(scaled);
  }
  return Recording(to, std::move(channels), recording.eog_index(), recording.trigger_index(),
                   std::move(bounds));
}

nlohmann::json to_json(const FirFilter& filter) {
  return {{"type", "fir"},
          {"kind", filter.design.kind == FirKind::lowpass ? "lowpass" : "highpass"},
          {"cutoff_hz", filter.design.cutoff_hz},
          {"sample_rate", filter.design.sample_rate},
          {"order", filter.design.order},
          {"taps", filter.taps}};
}

nlohmann::json to_json(const IirBandstop& filter) {
  nlohmann::json sos = nlohmann::json::array();
  for (const auto& s : filter.sections) sos.push_back({s.b0, s.b1, s.b2, 1.0, s.a1, s.a2});
  return {{"type", "butterworth_bandstop"},
          {"low_hz", filter.design.low_hz},
          {"high_hz", filter.design.high_hz},
          {"order", filter.design.order},
          {"sample_rate", filter.design.sample_rate},
          {"sos", sos}};
}

}  // namespace eogclean::dsp
