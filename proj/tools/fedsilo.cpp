#include <string>
#include <vector>

#include "fedsilo/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fedsilo::run_cli(args);
}
