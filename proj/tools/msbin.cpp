#include <iostream>

#include "msbin/cli.hpp"

int main(int argc, char** argv) {
  return msbin::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
