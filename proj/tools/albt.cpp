#include <iostream>

#include "albt/commands.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return albt::run_cli(args, std::cout, std::cerr);
}
