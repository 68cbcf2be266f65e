#pragma once

#include <string>

namespace boardcal::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

/// Current level, read once from the BOARDCAL_LOG environment variable
/// (debug|info|warn|error). Defaults to Warn.
Level level();

void write(Level lvl, const std::string& message);

inline void debug(const std::string& m) { write(Level::Debug, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void error(const std::string& m) { write(Level::Error, m); }

}  // namespace boardcal::log
