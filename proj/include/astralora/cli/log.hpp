#ifndef ASTRALORA_CLI_LOG_HPP
#define ASTRALORA_CLI_LOG_HPP

#include <string>

namespace astralora::cli {

enum class LogLevel { quiet = 0, error = 1, info = 2, debug = 3 };

/// Level from ASTRALORA_LOG (quiet|error|info|debug), default info;
/// unrecognized values fall back to info. Read once per process.
LogLevel log_level();

// Messages go to stderr; stdout is reserved for command results.
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace astralora::cli

#endif
