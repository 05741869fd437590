#include "eogclean/annotation_server.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "eogclean/errors.hpp"
#include "eogclean/io.hpp"
#include "eogclean/segmentation.hpp"
#include "httplib.h"

namespace eogclean::annotation {
namespace {

bool parse_size(const httplib::Request& req, const char* key, std::size_t& out) {
  if (!req.has_param(key)) return false;
  const std::string s = req.get_param_value(key);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

double abs_correlation(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::abs(sab) / std::sqrt(saa * sbb);
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

AnnotationServer::AnnotationServer(Recording recording, std::filesystem::path msf_path,
                                   std::optional<std::filesystem::path> static_dir)
    : recording_(std::move(recording)),
      msf_path_(std::move(msf_path)),
      server_(std::make_unique<httplib::Server>()),
      msf_(recording_.length(), {}) {
  if (recording_.trial_bounds().empty() && recording_.trigger_index()) {
    try {
      recording_ = seg::segment(recording_);
    } catch (const Error&) {
      // Unsegmentable trigger: serve without trial markers.
    }
  }
  if (std::filesystem::exists(msf_path_)) {
    const MsfDocument doc = io::load_msf(msf_path_);
    if (doc.msf.length() != recording_.length()) {
      throw SchemaError("annotation: stored MSF length does not match the recording");
    }
    msf_ = doc.msf;
  }

  std::vector<std::pair<double, std::size_t>> scored;
  if (recording_.eog_index()) {
    const auto eog = recording_.samples(*recording_.eog_index());
    for (std::size_t i : recording_.eeg_indices()) {
      scored.emplace_back(abs_correlation(eog, recording_.samples(i)), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  }
  std::vector<std::string> suggested;
  for (std::size_t k = 0; k < std::min(kSuggestedChannels, scored.size()); ++k) {
    suggested.push_back(recording_.channel(scored[k].second).label);
  }

  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : recording_.trial_bounds()) trials.push_back({t.start, t.end});
  auto index_json = [](std::optional<std::size_t> i) { return i ? nlohmann::json(*i) : nlohmann::json(nullptr); };
  meta_ = {{"labels", recording_.labels()},
           {"sample_rate", recording_.sample_rate()},
           {"length", recording_.length()},
           {"trial_bounds", trials},
           {"eog_index", index_json(recording_.eog_index())},
           {"trigger_index", index_json(recording_.trigger_index())},
           {"suggested_channels", suggested}};

  if (static_dir) server_->set_mount_point("/", static_dir->string());
  install_routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw ArgumentError("annotation: cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void AnnotationServer::listen() { server_->listen_after_bind(); }

void AnnotationServer::stop() {
  if (server_) server_->stop();
}

nlohmann::json AnnotationServer::meta() const { return meta_; }

nlohmann::json AnnotationServer::msf_document() const {
  std::lock_guard lock(mutex_);
  nlohmann::json doc = msf_to_json(msf_, recording_.sample_rate());
  doc["revision"] = std::to_string(revision_);
  return doc;
}

void AnnotationServer::install_routes() {
  server_->Get("/meta", [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, meta_); });

  server_->Get("/window", [this](const httplib::Request& req, httplib::Response& res) {
    std::size_t start = 0, len = 0;
    if (!parse_size(req, "start", start) || !parse_size(req, "len", len) || len == 0 ||
        start >= recording_.length() || len > recording_.length() - start) {
      send_error(res, 400, "window must satisfy 0 < len and start + len <= " + std::to_string(recording_.length()));
      return;
    }
    std::size_t points = kDefaultWindowPoints;
    if (req.has_param("points")) {
      if (!parse_size(req, "points", points) || points == 0) {
        send_error(res, 400, "points must be a positive integer");
        return;
      }
    }

    std::vector<std::size_t> picks;
    if (recording_.eog_index()) picks.push_back(*recording_.eog_index());
    std::vector<std::string> wanted;
    if (req.has_param("channels")) {
      std::string list = req.get_param_value("channels");
      std::size_t pos = 0;
      while (pos <= list.size()) {
        const std::size_t comma = std::min(list.find(',', pos), list.size());
        if (comma > pos) wanted.push_back(list.substr(pos, comma - pos));
        pos = comma + 1;
      }
    } else {
      wanted = meta_.at("suggested_channels").get<std::vector<std::string>>();
    }
    for (const auto& label : wanted) {
      const auto idx = recording_.find(label);
      if (!idx) {
        send_error(res, 400, "unknown channel '" + label + "'");
        return;
      }
      if (std::find(picks.begin(), picks.end(), *idx) == picks.end()) picks.push_back(*idx);
    }

    const std::size_t bucket = (len + points - 1) / points;
    nlohmann::json channels = nlohmann::json::array();
    for (std::size_t idx : picks) {
      const auto x = recording_.samples(idx);
      std::vector<double> lo, hi;
      for (std::size_t b = start; b < start + len; b += bucket) {
        const std::size_t e = std::min(b + bucket, start + len);
        const auto [mn, mx] = std::minmax_element(x.begin() + static_cast<std::ptrdiff_t>(b),
                                                  x.begin() + static_cast<std::ptrdiff_t>(e));
        lo.push_back(*mn);
        hi.push_back(*mx);
      }
      channels.push_back({{"label", recording_.channel(idx).label}, {"min", lo}, {"max", hi}});
    }
    send_json(res, 200, {{"start", start}, {"len", len}, {"bucket", bucket}, {"channels", channels}});
  });

  server_->Get("/msf", [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, msf_document()); });

  server_->Put("/msf", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      send_error(res, 400, "body is not valid JSON");
      return;
    }
    std::lock_guard lock(mutex_);
    const std::string current = std::to_string(revision_);
    if (!body.is_object() || !body.contains("revision") || !body.at("revision").is_string() ||
        body.at("revision").get<std::string>() != current) {
      send_json(res, 409, {{"error", "stale revision"}, {"revision", current}});
      return;
    }
    MsfDocument doc;
    try {
      doc = msf_from_json(body);
    } catch (const Error& e) {
      send_error(res, 400, e.what());
      return;
    }
    if (doc.msf.length() != recording_.length() ||
        std::abs(doc.sample_rate - recording_.sample_rate()) > 1e-9 * recording_.sample_rate()) {
      send_error(res, 400, "MSF length or sample rate does not match the recording");
      return;
    }
    try {
      io::save_msf(doc.msf, recording_.sample_rate(), msf_path_);
    } catch (const std::exception& e) {
      send_error(res, 500, std::string("could not persist MSF: ") + e.what());
      return;
    }
    msf_ = std::move(doc.msf);
    ++revision_;
    nlohmann::json out = msf_to_json(msf_, recording_.sample_rate());
    out["revision"] = std::to_string(revision_);
    send_json(res, 200, out);
  });
}

}  // namespace eogclean::annotation
