#include "vdlab/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

#include "vdlab/util.hpp"

namespace vdlab {

namespace {

LogLevel parse_level() {
  const char* env = std::getenv("VDLAB_LOG");
  if (env == nullptr) return LogLevel::kWarn;
  std::string v = to_lower(trim(env));
  if (v == "error" || v == "0") return LogLevel::kError;
  if (v == "warn" || v == "warning" || v == "1") return LogLevel::kWarn;
  if (v == "info" || v == "2") return LogLevel::kInfo;
  if (v == "debug" || v == "3") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "error";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kInfo: return "info";
    case LogLevel::kDebug: return "debug";
  }
  return "?";
}

std::mutex g_mutex;

}  // namespace

LogLevel log_level() {
  static LogLevel level = parse_level();
  return level;
}

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[vdlab %s] %s\n", level_tag(level), msg.c_str());
}

}  // namespace vdlab
