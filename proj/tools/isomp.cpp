#include "isomp/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return isomp::cli::run(argc, argv, std::cout, std::cerr);
}
