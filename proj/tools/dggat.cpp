#include <iostream>
#include <string>
#include <vector>

#include "dggat/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dggat::cli::run(args, std::cout, std::cerr);
}
