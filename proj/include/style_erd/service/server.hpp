#pragma once

#include "style_erd/model/generator.hpp"
#include "style_erd/service/protocol.hpp"

#include <filesystem>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

namespace style_erd::service {

enum class Transport { stdio, tcp, websocket };

Transport parse_transport(const std::string& name);

struct ServeOptions {
  Transport transport = Transport::stdio;
  std::string host = "127.0.0.1";
  unsigned short port = 0;  // 0 lets the OS pick
  // Static files served over HTTP next to the WebSocket endpoint.
  std::filesystem::path ui_root;
  int threads = 0;  // 0: configured_threads()
  SessionOptions session;
};

// STYLE_ERD_THREADS when set (>= 1), else the hardware concurrency.
int configured_threads();

// One session over a line stream (stdin/stdout or a pipe). Returns when the
// input ends or the session closes.
void serve_stream(const model::Generator& gen, std::istream& in, std::ostream& out,
                  const SessionOptions& options = {});

// TCP (newline-delimited JSON) or WebSocket (one JSON object per message)
// listener; one independent session per connection over the shared,
// read-only generator.
class Server {
 public:
  Server(const model::Generator& gen, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds, starts the worker threads and returns the bound port.
  unsigned short start();
  // Blocks until stop() (from another thread or a signal).
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Content type used for a static asset.
std::string mime_type(const std::filesystem::path& path);
// Maps a request target onto a file under root; empty when it would escape
// the root or names no regular file.
std::filesystem::path resolve_asset(const std::filesystem::path& root, const std::string& target);

}  // namespace style_erd::service
