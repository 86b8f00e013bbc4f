#include <string>
#include <vector>

#include "radreg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return radreg::cli::run(args);
}
