#include <iostream>

#include "chainvoice/cli.hpp"
#include "chainvoice/service/config.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return chainvoice::cli::run(args, std::cout, std::cerr, chainvoice::service::process_env());
}
