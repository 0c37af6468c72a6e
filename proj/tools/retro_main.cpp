#include <iostream>

#include "retro/cli.hpp"

int main(int argc, char** argv) {
  return retro::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
