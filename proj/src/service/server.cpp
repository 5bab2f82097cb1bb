#include "style_erd/service/server.hpp"

#include "style_erd/errors.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace style_erd::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::awaitable;
using asio::ip::tcp;

Transport parse_transport(const std::string& name) {
  if (name == "stdio") return Transport::stdio;
  if (name == "tcp") return Transport::tcp;
  if (name == "ws" || name == "websocket") return Transport::websocket;
  throw DomainError("unknown transport '" + name + "' (stdio, tcp, ws)");
}

int configured_threads() {
  if (const char* env = std::getenv("STYLE_ERD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw DomainError(std::string("STYLE_ERD_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void serve_stream(const model::Generator& gen, std::istream& in, std::ostream& out,
                  const SessionOptions& options) {
  ProtocolSession session(gen, options);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    for (const std::string& reply : session.handle(line)) out << reply << '\n';
    out.flush();
  }
}

std::string mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".bvh" || ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

std::filesystem::path resolve_asset(const std::filesystem::path& root, const std::string& target) {
  std::string path = target.substr(0, target.find_first_of("?#"));
  if (path.empty() || path.front() != '/') return {};
  if (path.back() == '/') path += "index.html";
  std::filesystem::path rel = std::filesystem::path(path.substr(1)).lexically_normal();
  for (const auto& part : rel) {
    if (part == "..") return {};
  }
  const std::filesystem::path full = root / rel;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(full, ec)) return {};
  return full;
}

namespace {

awaitable<void> tcp_session(tcp::socket socket, const model::Generator& gen, SessionOptions options) {
  ProtocolSession session(gen, std::move(options));
  std::string buffer;
  try {
    while (!session.closed()) {
      const std::size_t n =
          co_await asio::async_read_until(socket, asio::dynamic_buffer(buffer), '\n', asio::use_awaitable);
      std::string line = buffer.substr(0, n - 1);
      buffer.erase(0, n);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::string reply;
      for (const std::string& r : session.handle(line)) reply += r + '\n';
      if (!reply.empty()) co_await asio::async_write(socket, asio::buffer(reply), asio::use_awaitable);
    }
  } catch (const boost::system::system_error&) {
    // Peer went away; the session dies with the connection.
  }
  boost::system::error_code ignored;
  socket.shutdown(tcp::socket::shutdown_both, ignored);
}

awaitable<void> websocket_session(websocket::stream<beast::tcp_stream> ws,
                                  http::request<http::string_body> request, const model::Generator& gen,
                                  SessionOptions options) {
  ProtocolSession session(gen, std::move(options));
  try {
    ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    co_await ws.async_accept(request, asio::use_awaitable);
    ws.text(true);
    beast::flat_buffer buffer;
    while (!session.closed()) {
      co_await ws.async_read(buffer, asio::use_awaitable);
      const std::string message = beast::buffers_to_string(buffer.data());
      buffer.consume(buffer.size());
      for (const std::string& r : session.handle(message)) {
        co_await ws.async_write(asio::buffer(r), asio::use_awaitable);
      }
    }
    co_await ws.async_close(websocket::close_code::normal, asio::use_awaitable);
  } catch (const boost::system::system_error&) {
  }
}

http::response<http::string_body> static_response(const http::request<http::string_body>& req,
                                                  const std::filesystem::path& root) {
  auto reply = [&](http::status status, std::string body, const std::string& type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, type);
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head) {
    return reply(http::status::method_not_allowed, "GET only\n", "text/plain");
  }
  if (root.empty()) return reply(http::status::not_found, "no UI bundle configured (--ui)\n", "text/plain");
  const std::filesystem::path file = resolve_asset(root, std::string(req.target()));
  if (file.empty()) return reply(http::status::not_found, "not found\n", "text/plain");
  std::ifstream in(file, std::ios::binary);
  std::ostringstream body;
  body << in.rdbuf();
  auto res = reply(http::status::ok, body.str(), mime_type(file));
  if (req.method() == http::verb::head) res.body().clear();
  return res;
}

awaitable<void> http_session(tcp::socket socket, const model::Generator& gen, SessionOptions options,
                             std::filesystem::path root) {
  beast::tcp_stream stream(std::move(socket));
  beast::flat_buffer buffer;
  try {
    for (;;) {
      http::request<http::string_body> req;
      stream.expires_after(std::chrono::seconds(30));
      co_await http::async_read(stream, buffer, req, asio::use_awaitable);
      if (websocket::is_upgrade(req)) {
        stream.expires_never();
        co_await websocket_session(websocket::stream<beast::tcp_stream>(std::move(stream)), std::move(req), gen,
                                   std::move(options));
        co_return;
      }
      auto res = static_response(req, root);
      const bool keep = res.keep_alive();
      co_await http::async_write(stream, res, asio::use_awaitable);
      if (!keep) break;
    }
  } catch (const boost::system::system_error&) {
  }
  boost::system::error_code ignored;
  stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
}

}  // namespace

struct Server::Impl {
  Impl(const model::Generator& g, ServeOptions o) : gen(g), options(std::move(o)) {}

  const model::Generator& gen;
  ServeOptions options;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::vector<std::thread> workers;

  awaitable<void> accept_loop() {
    for (;;) {
      tcp::socket socket = co_await acceptor.async_accept(asio::use_awaitable);
      socket.set_option(tcp::no_delay(true));
      // Each connection gets its own strand so its messages stay in order
      // while other connections run on other workers.
      auto strand = asio::make_strand(io);
      if (options.transport == Transport::tcp) {
        asio::co_spawn(strand, tcp_session(std::move(socket), gen, options.session), asio::detached);
      } else {
        asio::co_spawn(strand, http_session(std::move(socket), gen, options.session, options.ui_root),
                       asio::detached);
      }
    }
  }
};

Server::Server(const model::Generator& gen, ServeOptions options)
    : impl_(std::make_unique<Impl>(gen, std::move(options))) {
  if (impl_->options.transport == Transport::stdio) {
    throw ContractError("Server handles tcp and ws transports; use serve_stream for stdio");
  }
  if (!impl_->options.ui_root.empty() && !std::filesystem::is_directory(impl_->options.ui_root)) {
    throw std::runtime_error("UI root " + impl_->options.ui_root.string() + " is not a directory");
  }
}

Server::~Server() {
  stop();
  wait();
}

unsigned short Server::start() {
  Impl& s = *impl_;
  const tcp::endpoint ep(asio::ip::make_address(s.options.host), s.options.port);
  s.acceptor.open(ep.protocol());
  s.acceptor.set_option(asio::socket_base::reuse_address(true));
  s.acceptor.bind(ep);
  s.acceptor.listen();
  asio::co_spawn(s.io, s.accept_loop(), asio::detached);
  const int threads = s.options.threads > 0 ? s.options.threads : configured_threads();
  for (int i = 0; i < threads; ++i) s.workers.emplace_back([&s] { s.io.run(); });
  return s.acceptor.local_endpoint().port();
}

void Server::wait() {
  for (std::thread& t : impl_->workers) {
    if (t.joinable()) t.join();
  }
  impl_->workers.clear();
}

void Server::stop() { impl_->io.stop(); }

}  // namespace style_erd::service
