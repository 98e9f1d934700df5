#include <iostream>

#include "mdapt/cli/commands.h"

int main(int argc, char** argv) {
  return mdapt::cli::run_cli(argc, argv, std::cout, std::cerr);
}
