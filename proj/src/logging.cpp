#include "textrobust/logging.hpp"

#include <cstdio>

namespace textrobust {

namespace {
LogLevel g_level = LogLevel::warn;
}

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(const std::string& msg) {
    if (g_level >= LogLevel::warn) std::fprintf(stderr, "[warn] %s\n", msg.c_str());
}

void log_info(const std::string& msg) {
    if (g_level >= LogLevel::info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (g_level >= LogLevel::debug) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

}  // namespace textrobust
