#pragma once

#include <string>
#include <vector>

namespace levytree {

// Full CLI entry point (argv-style, without the program name).
// Exit codes: 0 ok, 2 config, 3 io, 4 numeric, 5 acceptance-check failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace levytree
