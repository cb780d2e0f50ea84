// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return glossplat::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
