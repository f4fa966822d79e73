#include <iostream>
#include <string>
#include <vector>

#include "rdot_cli/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return rdot::cli::run(args, std::cout, std::cerr);
}
