#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "rangecap/experiments.hpp"

namespace {

extern "C" void on_signal(int) { rangecap::stop_requested().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::vector<std::string> args(argv + 1, argv + argc);
  return rangecap::run_cli(args, std::cout, std::cerr);
}
