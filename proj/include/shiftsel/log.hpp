#pragma once

#include <string_view>

namespace shiftsel::log {

enum class Level { kError, kInfo, kDebug };

// Level is read once from SPR_LOG (error|info|debug, default error).
Level level();
void set_level(Level level);

void error(std::string_view message);
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace shiftsel::log
