#include "forgebot/server.hpp"

#include <atomic>
#include <csignal>
#include <iostream>
#include <thread>

#include "forgebot/bot.hpp"
#include "forgebot/config.hpp"
#include "forgebot/ingress.hpp"
#include "forgebot/live_forge.hpp"
#include "httplib.h"

#ifndef FORGEBOT_BUILD_ID
#define FORGEBOT_BUILD_ID "dev"
#endif

namespace forgebot {

namespace {

volatile std::sig_atomic_t g_signalled = 0;

void on_signal(int) { g_signalled = 1; }

RawDelivery to_delivery(Provider provider, const httplib::Request& req, Timestamp now) {
  RawDelivery d;
  d.provider = provider;
  for (const auto& [k, v] : req.headers) d.headers[k] = v;
  d.body = req.body;
  d.received_at = now;
  return d;
}

int status_of(IngressOutcome o) {
  switch (o) {
    case IngressOutcome::Queued:
    case IngressOutcome::Duplicate:
    case IngressOutcome::Ignored:
      return 202;
    case IngressOutcome::Unauthorized:
      return 401;
    case IngressOutcome::Malformed:
      return 400;
  }
  return 500;
}

}  // namespace

std::pair<std::string, int> parse_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) throw InvalidInput("listen address must be host:port: " + listen);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw InvalidInput("bad port in listen address: " + listen);
  return {listen.substr(0, colon), port};
}

int serve(const BotConfig& config, std::size_t workers) {
  auto [host, port] = parse_listen(config.listen);
  auto secret = webhook_secret(config);
  if (secret.empty()) {
    std::cerr << "bot: " << config.secrets.webhook_secret << " is not set\n";
    return 2;
  }

  SystemClock clock;
  live::LiveForge forge(config, live::credentials_from_env(config.secrets),
                        live::make_http_transport(config.github_api), live::make_http_transport(config.gitlab_api),
                        clock);
  std::unique_ptr<live::HttpJobRunner> runner;
  if (config.runner_url) {
    auto url = *config.runner_url;
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    auto path = path_start == std::string::npos ? std::string("/") : url.substr(path_start);
    runner = std::make_unique<live::HttpJobRunner>(live::make_http_transport(url.substr(0, path_start)), path);
  }

  Engine engine(forge, config, clock, runner.get());
  engine.set_log(&std::cerr);
  install_standard_workflows(engine);
  QueueDispatcher queue(engine, workers);
  Ingress ingress(config.gateway(), secret, queue);
  ingress.set_log(&std::cerr);

  httplib::Server server;
  // httplib's default adds SO_REUSEPORT, which lets a second instance bind
  // the same port silently.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string("ok ") + FORGEBOT_BUILD_ID + "\n", "text/plain");
  });
  auto webhook = [&](Provider provider) {
    return [&, provider](const httplib::Request& req, httplib::Response& res) {
      auto r = ingress.receive(to_delivery(provider, req, clock.now()));
      res.status = status_of(r.outcome);
      res.set_content(std::string(to_string(r.outcome)) + "\n", "text/plain");
    };
  };
  server.Post("/webhook/github", webhook(Provider::GitHub));
  server.Post("/webhook/gitlab", webhook(Provider::GitLab));
  server.Post("/runner/complete", [&](const httplib::Request& req, httplib::Response& res) {
    auto r = ingress.receive_runner(to_delivery(Provider::GitHub, req, clock.now()));
    res.status = status_of(r.outcome);
    res.set_content(std::string(to_string(r.outcome)) + "\n", "text/plain");
  });

  if (!server.bind_to_port(host, port)) {
    std::cerr << "bot: cannot listen on " << config.listen << '\n';
    return 1;
  }

  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);

  // Watches for signals and fires the scheduler; stopping the server from
  // here keeps the signal handler trivial.
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    auto next_tick = std::chrono::steady_clock::now();
    while (!done) {
      if (g_signalled) {
        // Repeated until listen returns: stop() before the accept loop has
        // started is a no-op.
        server.stop();
      } else if (std::chrono::steady_clock::now() >= next_tick) {
        for (auto& ev : engine.due_ticks(clock.now())) queue.enqueue(std::move(ev));
        next_tick += std::chrono::seconds(10);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });

  std::cerr << "bot: listening on " << config.listen << '\n';
  server.listen_after_bind();

  done = true;
  watcher.join();
  queue.stop();
  std::cerr << "bot: stopped\n";
  return 0;
}

}  // namespace forgebot
