#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace edit_suggest {

/// Entry point of the `edit-suggest` tool. args[0] is the program name.
/// Returns the process exit code; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Output directory used when --out is absent: $EDIT_SUGGEST_OUT, else ".".
std::filesystem::path default_output_dir();

}  // namespace edit_suggest
