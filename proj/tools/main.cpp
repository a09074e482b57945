#include <iostream>
#include <string>
#include <vector>

#include "vqa4cir/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return static_cast<int>(vqa4cir::cli::dispatch(args, std::cout, std::cerr));
}
