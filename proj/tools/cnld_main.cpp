#include <iostream>

#include "cnld/cli.hpp"

int main(int argc, char** argv) {
  return cnld::run_cli(argc, argv, std::cout, std::cerr);
}
