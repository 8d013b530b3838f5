#include <string>
#include <vector>

#include "levytree/cli_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return levytree::run_cli(args);
}
