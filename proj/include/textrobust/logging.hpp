#pragma once

#include <string>

namespace textrobust {

enum class LogLevel { quiet = 0, warn = 1, info = 2, debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();

// All diagnostics go to stderr; stdout is reserved for command output.
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace textrobust
