#include "chainvoice/service/http_server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <thread>

namespace chainvoice::service {
namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void add_cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Headers", "X-Api-Key, Content-Type");
  res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
}

}  // namespace

void request_shutdown() { g_stop.store(true); }

int serve(Service& service, std::ostream& log, const std::function<void(int)>& on_ready) {
  const ServiceConfig& cfg = service.config();
  httplib::Server server;

  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.target = req.target.empty() ? req.path : req.target;
    r.body = req.body;
    for (const auto& [k, v] : req.headers) r.headers.emplace(k, v);
    Response out = service.handle(r);
    res.status = out.status;
    add_cors(res);
    if (out.status != 204) res.set_content(out.body.dump(), "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Options(".*", handler);
  server.set_logger([&log](const httplib::Request& req, const httplib::Response& res) {
    // Never echo headers: they carry API keys.
    log << req.method << " " << req.path << " " << res.status << std::endl;
  });

  int port = cfg.port;
  if (port == 0) {
    port = server.bind_to_any_port(cfg.listen_address);
  } else if (!server.bind_to_port(cfg.listen_address, port)) {
    port = -1;
  }
  if (port < 0) {
    log << "error: cannot bind " << cfg.listen_address << ":" << cfg.port << std::endl;
    return 1;
  }

  g_stop.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  std::thread ticker([&] {
    using clock = std::chrono::steady_clock;
    const auto interval = std::chrono::seconds(std::max<std::uint64_t>(cfg.block_interval, 1));
    auto next = clock::now() + interval;
    while (!g_stop.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      if (clock::now() >= next) {
        try {
          service.seal();
        } catch (const std::exception& e) {
          log << "error: sealing failed: " << e.what() << std::endl;
          g_stop.store(true);
        }
        next = clock::now() + interval;
      }
    }
    server.stop();
  });

  log << "listening on " << cfg.listen_address << ":" << port << " (" << to_string(cfg.node_mode) << ", chain "
      << cfg.chain_id << ")" << std::endl;
  if (on_ready) on_ready(port);
  const bool ok = server.listen_after_bind();
  g_stop.store(true);
  ticker.join();
  try {
    service.seal();
  } catch (const std::exception& e) {
    log << "error: final seal failed: " << e.what() << std::endl;
    return 1;
  }
  log << "stopped" << std::endl;
  return ok ? 0 : 1;
}

}  // namespace chainvoice::service
