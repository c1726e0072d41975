#include <string>
#include <vector>

#include "sepgd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sepgd::run_cli(args);
}
