#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cgc::cli {

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode { ok = 0, failure = 1, usage = 2, infeasible = 3, nonconvergence = 4 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_main(int argc, char** argv);

// 64-bit FNV-1a of a file's bytes, hex encoded; used by manifests.
std::string file_digest(const std::string& path);

}  // namespace cgc::cli
