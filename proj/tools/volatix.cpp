#include <iostream>
#include <string>
#include <vector>

#include "volatix/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return volatix::cli::run(args, std::cout, std::cerr);
}
