#include <iostream>
#include <string>
#include <vector>

#include "tsuq/cli.hpp"

int main(int argc, char** argv) {
  return tsuq::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
