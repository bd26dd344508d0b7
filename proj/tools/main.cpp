#include <iostream>
#include <string>
#include <vector>

#include "uniformity/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return uniformity::cli::dispatch(args, std::cin, std::cout, std::cerr);
}
