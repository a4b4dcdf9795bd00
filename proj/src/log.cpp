#include "shiftsel/log.hpp"

#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace shiftsel::log {
namespace {

spdlog::level::level_enum to_spdlog(Level level) {
  switch (level) {
    case Level::kError: return spdlog::level::err;
    case Level::kInfo: return spdlog::level::info;
    case Level::kDebug: return spdlog::level::debug;
  }
  return spdlog::level::err;
}

Level level_from_env() {
  const char* raw = std::getenv("SPR_LOG");
  if (raw == nullptr) return Level::kError;
  const std::string value(raw);
  if (value == "debug") return Level::kDebug;
  if (value == "info") return Level::kInfo;
  return Level::kError;
}

struct State {
  std::shared_ptr<spdlog::logger> logger;
  Level level;
};

State& state() {
  static State s = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto logger = std::make_shared<spdlog::logger>("shiftsel", sink);
    logger->set_pattern("[%l] %v");
    Level lvl = level_from_env();
    logger->set_level(to_spdlog(lvl));
    return State{std::move(logger), lvl};
  }();
  return s;
}

}  // namespace

Level level() { return state().level; }

void set_level(Level lvl) {
  state().level = lvl;
  state().logger->set_level(to_spdlog(lvl));
}

void error(std::string_view message) { state().logger->error(message); }
void info(std::string_view message) { state().logger->info(message); }
void debug(std::string_view message) { state().logger->debug(message); }

}  // namespace shiftsel::log
