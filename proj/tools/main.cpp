#include <iostream>
#include <string>
#include <vector>

#include "corpusforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return corpusforge::cli::run(args, std::cout, std::cerr);
}
