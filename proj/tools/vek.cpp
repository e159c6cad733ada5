#include <iostream>
#include <string>
#include <vector>

#include "vek/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vek::cli::dispatch(args, std::cout, std::cerr);
}
