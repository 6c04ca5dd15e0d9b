#pragma once

// Command line driver for the desk-scale experiments. Kept as a library
// function so the tests can call it without spawning processes.

#include <string>
#include <vector>

namespace sfk::cli {

/// `args` excludes the program name. Exit status: 0 success, 1 runtime/I-O failure, 2 invalid configuration.
int run(const std::vector<std::string>& args);

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

}  // namespace sfk::cli
