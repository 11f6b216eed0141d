#include "carnotkit/log.hpp"

#include <cstdlib>
#include <iostream>

namespace carnotkit {

namespace {
bool g_quiet = false;

LogLevel env_level() {
  const char* env = std::getenv("CARNOTKIT_LOG");
  if (!env) return LogLevel::Error;
  std::string s(env);
  if (s == "debug") return LogLevel::Debug;
  if (s == "info") return LogLevel::Info;
  return LogLevel::Error;
}
}  // namespace

LogLevel log_level() { return env_level(); }

void set_log_quiet(bool quiet) { g_quiet = quiet; }

void log_error(const std::string& msg) {
  if (g_quiet) return;
  std::cerr << "[error] " << msg << "\n";
}

void log_info(const std::string& msg) {
  if (g_quiet || log_level() < LogLevel::Info) return;
  std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (g_quiet || log_level() < LogLevel::Debug) return;
  std::cerr << "[debug] " << msg << "\n";
}

}  // namespace carnotkit
