#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace chainvoice::cli {

// Exit codes. API error classes each get their own code.
enum Exit : int {
  kOk = 0,
  kFailure = 1,  // verification failed, startup error, local I/O error
  kUsage = 2,
  kConnection = 3,
  kUnauthorized = 4,   // 401
  kForbidden = 5,      // 403
  kNotFound = 6,       // 404
  kConflict = 7,       // 409
  kUnprocessable = 8,  // 422
  kBadRequest = 9,     // 400
  kServerError = 10,   // anything else
};

int exit_code_for_status(int http_status);

// args[0] is the program name. `env` supplies CHAINVOICE_* defaults.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env);

}  // namespace chainvoice::cli
