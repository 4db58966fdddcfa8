#include "astralora/cli/log.hpp"

#include <cstdlib>
#include <iostream>

namespace astralora::cli {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("ASTRALORA_LOG");
        if (!env) return LogLevel::info;
        const std::string v(env);
        if (v == "quiet") return LogLevel::quiet;
        if (v == "error") return LogLevel::error;
        if (v == "info") return LogLevel::info;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

namespace {

void emit(LogLevel at, const char* tag, const std::string& msg) {
    if (log_level() >= at) std::cerr << tag << msg << std::endl;
}

} // namespace

void log_error(const std::string& msg) { emit(LogLevel::error, "error: ", msg); }
void log_info(const std::string& msg) { emit(LogLevel::info, "", msg); }
void log_debug(const std::string& msg) { emit(LogLevel::debug, "debug: ", msg); }

} // namespace astralora::cli
