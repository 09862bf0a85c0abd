#pragma once

#include <memory>
#include <string>

#include "automcq/service.hpp"

namespace automcq {

// Serves QuizService::handle over HTTP/1.1 on a thread pool.
class HttpServer {
 public:
  explicit HttpServer(QuizService &service);
  ~HttpServer();

  HttpServer(const HttpServer &) = delete;
  HttpServer &operator=(const HttpServer &) = delete;

  // Port 0 picks a free port. False when the address cannot be bound.
  bool bind(const std::string &host, int port);
  int port() const noexcept { return port_; }

  // Blocks until stop() is called from another thread.
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace automcq
