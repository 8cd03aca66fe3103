#include <iostream>
#include <string>
#include <vector>

#include "ghostdet/tools/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ghostdet::tools::run_cli(args, std::cout, std::cerr);
}
