// Deterministic stand-in model server for tests and offline runs.

#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "proverbkit/error.hpp"
#include "proverbkit/mock_backend.hpp"

namespace pk = proverbkit;

int main(int argc, char** argv) {
  CLI::App app{"Serve the deterministic mock model over HTTP on 127.0.0.1 until SIGINT/SIGTERM."};
  std::string config;
  int port = 0;
  app.add_option("--config", config, "Mock config (JSON: memory, fixtures, embed_dim, judge_policy)")
      ->check(CLI::ExistingFile);
  app.add_option("--port", port, "Port to bind (0 picks a free one)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  // Block the signals before the server threads start so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    pk::MockBackendOptions options =
        config.empty() ? pk::MockBackendOptions{} : pk::MockBackendOptions::from_file(config);
    pk::MockHttpServer server(pk::MockBackend(std::move(options)), port);
    std::cout << server.endpoint() << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {} received; stopping", sig);
    server.stop();
  } catch (const pk::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.exit_code());
  }
  return 0;
}
