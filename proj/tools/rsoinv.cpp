#include <iostream>
#include <string>
#include <vector>

#include "rsoinv/cli.hpp"

int main(int argc, char** argv) {
  return rsoinv::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
