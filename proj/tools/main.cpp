#include <vector>

#include "biomech/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return biomech::cli_main(args);
}
