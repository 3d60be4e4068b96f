#include <iostream>

#include "emorec/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return emorec::cli::run(args, std::cout, std::cerr);
}
