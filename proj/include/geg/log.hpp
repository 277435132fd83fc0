#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace geg::log {

enum class Level { Off = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity comes from the GEG_LOG environment variable:
// "off"/"0", "warn", "info", "debug". Default is warn.
inline Level level() {
  static Level lvl = [] {
    const char* env = std::getenv("GEG_LOG");
    if (!env) return Level::Warn;
    if (!std::strcmp(env, "off") || !std::strcmp(env, "0")) return Level::Off;
    if (!std::strcmp(env, "info")) return Level::Info;
    if (!std::strcmp(env, "debug")) return Level::Debug;
    return Level::Warn;
  }();
  return lvl;
}

inline void emit(Level lvl, const char* tag, const std::string& msg) {
  if (static_cast<int>(lvl) <= static_cast<int>(level())) {
    std::fprintf(stderr, "[geg:%s] %s\n", tag, msg.c_str());
  }
}

inline void warn(const std::string& msg) { emit(Level::Warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::Info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::Debug, "debug", msg); }

}  // namespace geg::log
