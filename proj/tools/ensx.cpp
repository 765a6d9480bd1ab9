#include <iostream>
#include <string>
#include <vector>

#include "ensx/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ensx::cli::run(args, std::cout, std::cerr);
}
