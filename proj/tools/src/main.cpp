#include "rkinv_cli/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return rkinv::cli::run(argc, argv, std::cout, std::cerr);
}
