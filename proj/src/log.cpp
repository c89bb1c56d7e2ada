#include "vsbo/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace vsbo {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Warning)};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view message) {
  if (g_level.load() < static_cast<int>(LogLevel::Warning)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[vsbo] warning: " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_level.load() < static_cast<int>(LogLevel::Info)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[vsbo] " << message << '\n';
}

}  // namespace vsbo
