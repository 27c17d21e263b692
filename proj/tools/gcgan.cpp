#include <string>
#include <vector>

#include "gcgan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gcgan::cli::run(std::move(args));
}
