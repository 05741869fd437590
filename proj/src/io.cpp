#include "eogclean/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "eogclean/errors.hpp"

namespace eogclean::io {
namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

void append_u64(std::string& out, std::uint64_t v) {
  const std::uint64_t le = to_little_endian(v);
  char buf[8];
  std::memcpy(buf, &le, 8);
  out.append(buf, 8);
}

std::uint64_t read_u64(const char* p) {
  std::uint64_t le = 0;
  std::memcpy(&le, p, 8);
  return to_little_endian(le);
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw SchemaError("config: unknown key '" + where + key + "'");
  }
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string encode_recording(const Recording& recording) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : recording.trial_bounds()) bounds.push_back({b.start, b.end});
  const nlohmann::json header = {
      {"version", kFormatVersion},
      {"sample_rate", recording.sample_rate()},
      {"channel_labels", recording.labels()},
      {"eog_index", recording.eog_index() ? nlohmann::json(*recording.eog_index()) : nlohmann::json(nullptr)},
      {"trigger_index",
       recording.trigger_index() ? nlohmann::json(*recording.trigger_index()) : nlohmann::json(nullptr)},
      {"sample_count", recording.length()},
      {"encoding", "f64le"},
      {"trial_bounds", bounds}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  append_u64(out, text.size());
  out += text;
  out.reserve(out.size() + 8 * recording.channel_count() * recording.length());
  for (const auto& ch : recording.channels()) {
    for (double v : ch.samples) append_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Recording decode_recording(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("recording: missing file magic");
  }
  const std::uint64_t header_len = read_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw FormatError("recording: header length exceeds file size");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("recording: malformed header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("version")) throw FormatError("recording: header has no version");
  if (!header.at("version").is_number_integer() || header.at("version").get<int>() != kFormatVersion) {
    throw VersionError("recording: unsupported format version " + header.at("version").dump() + " (expected " +
                       std::to_string(kFormatVersion) + ")");
  }

  double rate = 0.0;
  std::vector<std::string> labels;
  std::size_t count = 0;
  std::optional<std::size_t> eog;
  std::optional<std::size_t> trigger;
  std::vector<Interval> bounds;
  try {
    rate = header.at("sample_rate").get<double>();
    labels = header.at("channel_labels").get<std::vector<std::string>>();
    count = header.at("sample_count").get<std::size_t>();
    if (header.at("encoding").get<std::string>() != "f64le") throw FormatError("recording: unknown encoding");
    if (!header.at("eog_index").is_null()) eog = header.at("eog_index").get<std::size_t>();
    if (!header.at("trigger_index").is_null()) trigger = header.at("trigger_index").get<std::size_t>();
    if (header.contains("trial_bounds")) {
      for (const auto& b : header.at("trial_bounds")) bounds.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("recording: malformed header: ") + e.what());
  }

  const std::size_t payload_offset = 16 + header_len;
  const std::size_t expected = 8 * labels.size() * count;
  const std::size_t actual = bytes.size() - payload_offset;
  if (actual < expected) {
    throw TruncationError("recording: payload truncated, expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(actual));
  }
  if (actual > expected) {
    throw FormatError("recording: " + std::to_string(actual - expected) + " unexpected trailing bytes");
  }

  std::vector<Channel> channels;
  channels.reserve(labels.size());
  const char* p = bytes.data() + payload_offset;
  for (auto& label : labels) {
    Channel ch{std::move(label), std::vector<double>(count)};
    for (std::size_t i = 0; i < count; ++i, p += 8) ch.samples[i] = std::bit_cast<double>(read_u64(p));
    channels.push_back(std::move(ch));
  }
  try {
    return Recording(rate, std::move(channels), eog, trigger, std::move(bounds));
  } catch (const Error& e) {
    throw FormatError(std::string("recording: inconsistent header: ") + e.what());
  }
}

Recording load_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open recording '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_recording(buf.str());
}

void save_recording(const Recording& recording, const std::filesystem::path& path) {
  write_text(path, encode_recording(recording));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ArgumentError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MsfDocument load_msf(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("msf: malformed JSON in '" + path.string() + "': " + e.what());
  }
  return msf_from_json(j);
}

void save_msf(const MembershipFunction& msf, double sample_rate, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text(tmp, msf_to_json(msf, sample_rate).dump(2) + "\n");
  std::filesystem::rename(tmp, path);
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw ArgumentError("config: " + what); };
  if (!(target_rate > 0.0)) fail("target_rate must be positive");
  const double nyquist = 0.5 * target_rate;
  if (!(highpass_hz > 0.0 && highpass_hz < nyquist)) fail("highpass_hz must lie in (0, Nyquist)");
  if (!(lowpass_hz > 0.0 && lowpass_hz < nyquist)) fail("lowpass_hz must lie in (0, Nyquist)");
  if (!(bandstop_low_hz > 0.0 && bandstop_low_hz < bandstop_high_hz && bandstop_high_hz < nyquist)) {
    fail("bandstop needs 0 < low < high < Nyquist");
  }
  if (bandstop_order < 2 || bandstop_order % 2 != 0) fail("bandstop order must be even and >= 2");
  if (max_lag < 0) fail("max_lag must be non-negative");
  if (k_selected < 1) fail("k_selected must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(wmsf_slope_s >= 0.0)) fail("wmsf_slope_s must be non-negative");
  if (!(epoch_len_s > 0.0)) fail("epoch_len_s must be positive");
  ica.validate();
}

dsp::FilterChainConfig PipelineConfig::filter_chain() const {
  return {target_rate, highpass_hz, lowpass_hz, bandstop_low_hz, bandstop_high_hz, bandstop_order};
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("config: expected a JSON object");
  reject_unknown(j,
                 {"preprocess", "target_rate", "highpass_hz", "lowpass_hz", "bandstop", "max_lag", "k_selected",
                  "alpha", "wmsf_slope_s", "epoch_len_s", "ica"},
                 "");
  PipelineConfig c;
  try {
    read_key(j, "preprocess", c.preprocess);
    read_key(j, "target_rate", c.target_rate);
    read_key(j, "highpass_hz", c.highpass_hz);
    read_key(j, "lowpass_hz", c.lowpass_hz);
    read_key(j, "max_lag", c.max_lag);
    read_key(j, "k_selected", c.k_selected);
    read_key(j, "alpha", c.alpha);
    read_key(j, "wmsf_slope_s", c.wmsf_slope_s);
    read_key(j, "epoch_len_s", c.epoch_len_s);
    if (j.contains("bandstop")) {
      const auto& b = j.at("bandstop");
      reject_unknown(b, {"low_hz", "high_hz", "order"}, "bandstop.");
      read_key(b, "low_hz", c.bandstop_low_hz);
      read_key(b, "high_hz", c.bandstop_high_hz);
      read_key(b, "order", c.bandstop_order);
    }
    if (j.contains("ica")) {
      const auto& i = j.at("ica");
      reject_unknown(i, {"tolerance", "max_iterations", "seed", "nonlinearity"}, "ica.");
      read_key(i, "tolerance", c.ica.tolerance);
      read_key(i, "max_iterations", c.ica.max_iterations);
      read_key(i, "seed", c.ica.seed);
      if (i.contains("nonlinearity")) {
        const auto g = i.at("nonlinearity").get<std::string>();
        if (g == "tanh") {
          c.ica.nonlinearity = ica::Nonlinearity::tanh;
        } else if (g == "cube") {
          c.ica.nonlinearity = ica::Nonlinearity::cube;
        } else {
          throw SchemaError("config: unknown nonlinearity '" + g + "'");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"preprocess", c.preprocess},
          {"target_rate", c.target_rate},
          {"highpass_hz", c.highpass_hz},
          {"lowpass_hz", c.lowpass_hz},
          {"bandstop", {{"low_hz", c.bandstop_low_hz}, {"high_hz", c.bandstop_high_hz}, {"order", c.bandstop_order}}},
          {"max_lag", c.max_lag},
          {"k_selected", c.k_selected},
          {"alpha", c.alpha},
          {"wmsf_slope_s", c.wmsf_slope_s},
          {"epoch_len_s", c.epoch_len_s},
          {"ica",
           {{"tolerance", c.ica.tolerance},
            {"max_iterations", c.ica.max_iterations},
            {"seed", c.ica.seed},
            {"nonlinearity", c.ica.nonlinearity == ica::Nonlinearity::tanh ? "tanh" : "cube"}}}};
}

}  // namespace eogclean::io
