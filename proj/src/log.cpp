#include "imreg/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string_view>

namespace imreg::log {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* raw = std::getenv("REG_LOG_LEVEL");
  const std::string_view v = raw ? raw : "";
  if (v == "error") return spdlog::level::err;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

}  // namespace

spdlog::logger& logger() {
  static spdlog::logger instance = [] {
    spdlog::logger l("imreg", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l.set_pattern("[%l] %v");
    l.set_level(level_from_env());
    return l;
  }();
  return instance;
}

void reload_level() { logger().set_level(level_from_env()); }

}  // namespace imreg::log
