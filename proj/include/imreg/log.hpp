#pragma once

#include <spdlog/spdlog.h>

#include <utility>

// Run logging to stderr. Verbosity comes from REG_LOG_LEVEL
// (error, warn, info, debug); default is warn.
namespace imreg::log {

spdlog::logger& logger();

/// Re-reads REG_LOG_LEVEL.
void reload_level();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().debug(fmt, std::forward<Args>(args)...);
}
template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().info(fmt, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().warn(fmt, std::forward<Args>(args)...);
}
template <typename... Args>
void error(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().error(fmt, std::forward<Args>(args)...);
}

}  // namespace imreg::log
