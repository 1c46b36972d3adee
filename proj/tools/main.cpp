#include <iostream>
#include <string>
#include <vector>

#include "binsreg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return binsreg::cli::run(args, std::cout, std::cerr);
}
