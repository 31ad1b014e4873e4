#pragma once

#include <functional>
#include <ostream>

#include "chainvoice/service/config.hpp"
#include "chainvoice/service/service.hpp"

namespace chainvoice::service {

// Serves `service` over HTTP on the configured address until SIGINT/SIGTERM or
// request_shutdown(). Seals a block every block_interval seconds and once more on the
// way out. `on_ready` receives the bound port (useful with port 0). Returns an exit code.
int serve(Service& service, std::ostream& log, const std::function<void(int)>& on_ready = {});

void request_shutdown();

}  // namespace chainvoice::service
