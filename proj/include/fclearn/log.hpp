#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace fclearn {

// Verbosity from FCLEARN_LOG: quiet | info (default) | debug.
enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("FCLEARN_LOG");
        if (!env) return LogLevel::Info;
        std::string v(env);
        if (v == "quiet" || v == "0") return LogLevel::Quiet;
        if (v == "debug" || v == "2") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

template <class... Args>
void log_info(const char* fmt, Args... args) {
    if (log_level() >= LogLevel::Info) {
        std::fprintf(stderr, fmt, args...);
        std::fputc('\n', stderr);
    }
}

template <class... Args>
void log_debug(const char* fmt, Args... args) {
    if (log_level() >= LogLevel::Debug) {
        std::fprintf(stderr, fmt, args...);
        std::fputc('\n', stderr);
    }
}

}  // namespace fclearn
