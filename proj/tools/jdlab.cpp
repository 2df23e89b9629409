#include <string>
#include <vector>

#include "jdlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return jdlab::cli::run(args);
}
