#include <string>
#include <vector>

#include "fairvec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fairvec::run_cli(args);
}
