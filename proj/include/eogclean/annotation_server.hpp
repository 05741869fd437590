#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "eogclean/core.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace eogclean::annotation {

/// HTTP backend of the manual artifact annotation tool.
///
///   GET /meta            labels, rate, length, trial bounds, suggested channels
///   GET /window          ?start=&len=[&channels=a,b][&points=] min/max-decimated
///                        traces; EOG is always included; 400 on a bad range
///   GET /msf             current marks plus revision token
///   PUT /msf             body = MSF document with "revision"; 409 if the
///                        revision is stale, 400 if invalid. Marks are
///                        normalized and persisted atomically.
///
/// The recording is read-only; MSF writes are serialized by a mutex.
class AnnotationServer {
 public:
  AnnotationServer(Recording recording, std::filesystem::path msf_path,
                   std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

  nlohmann::json meta() const;
  nlohmann::json msf_document() const;

 private:
  void install_routes();

  Recording recording_;
  std::filesystem::path msf_path_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::mutex mutex_;
  MembershipFunction msf_;
  std::uint64_t revision_ = 1;
  nlohmann::json meta_;
};

inline constexpr std::size_t kSuggestedChannels = 4;
inline constexpr std::size_t kDefaultWindowPoints = 2000;

}  // namespace eogclean::annotation
