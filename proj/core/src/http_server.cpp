#include "automcq/http_server.hpp"

#include <httplib.h>

namespace automcq {

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(QuizService &service) : impl_(std::make_unique<Impl>()) {
  auto handler = [&service](const httplib::Request &req, httplib::Response &res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto &[key, value] : req.params) request.query.emplace(key, value);
    request.authorization = req.get_header_value("Authorization");
    request.body = req.body;
    const auto response = service.handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json; charset=utf-8");
  };
  auto &server = impl_->server;
  // httplib defaults to SO_REUSEPORT, which lets a second instance share the
  // port silently. Plain SO_REUSEADDR still allows quick restarts.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);
  server.Patch(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string &host, int port) {
  auto &server = impl_->server;
  if (port == 0) {
    port_ = server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace automcq
