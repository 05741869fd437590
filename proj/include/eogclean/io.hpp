#pragma once

#include <filesystem>
#include <string>

#include "eogclean/core.hpp"
#include "eogclean/dsp.hpp"
#include "eogclean/ica.hpp"
#include "json.hpp"

namespace eogclean::io {

/// Recording file layout:
///   8 bytes   magic "EOGCLEAN"
///   8 bytes   header length N, unsigned little-endian
///   N bytes   JSON header {version, sample_rate, channel_labels, eog_index,
///             trigger_index, sample_count, encoding: "f64le", trial_bounds}
///   payload   channel-major IEEE-754 binary64 little-endian samples
inline constexpr int kFormatVersion = 1;
inline constexpr char kMagic[8] = {'E', 'O', 'G', 'C', 'L', 'E', 'A', 'N'};

/// Throws FormatError (bad magic or header), VersionError, TruncationError.
Recording load_recording(const std::filesystem::path& path);
void save_recording(const Recording& recording, const std::filesystem::path& path);

std::string encode_recording(const Recording& recording);
Recording decode_recording(const std::string& bytes);

MsfDocument load_msf(const std::filesystem::path& path);
/// Writes through a temporary file renamed over `path`.
void save_msf(const MembershipFunction& msf, double sample_rate, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Every tunable of the cleaning pipeline. Defaults describe the standard
/// processing chain: 250 Hz, 1 Hz highpass, 47 Hz lowpass, 49-51 Hz order 4
/// band-stop, lag slack 7, two selected components, alpha 1.
struct PipelineConfig {
  bool preprocess = true;
  double target_rate = 250.0;
  double highpass_hz = 1.0;
  double lowpass_hz = 47.0;
  double bandstop_low_hz = 49.0;
  double bandstop_high_hz = 51.0;
  int bandstop_order = 4;
  int max_lag = 7;
  std::size_t k_selected = 2;
  double alpha = 1.0;
  double wmsf_slope_s = 0.5;
  double epoch_len_s = 1.0;
  ica::IcaConfig ica;

  void validate() const;
  dsp::FilterChainConfig filter_chain() const;
};

/// Missing keys keep their defaults; unknown keys throw SchemaError.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace eogclean::io
