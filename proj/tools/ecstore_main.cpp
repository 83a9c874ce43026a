#include <string>
#include <vector>

#include "ecstore/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ecstore::run_cli(args);
}
