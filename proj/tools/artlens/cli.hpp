#ifndef ARTLENS_TOOLS_CLI_HPP
#define ARTLENS_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace artlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one artlens command. Returns 0 on success, 1 on a domain error and
/// 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

} // namespace artlens::cli

#endif // ARTLENS_TOOLS_CLI_HPP
