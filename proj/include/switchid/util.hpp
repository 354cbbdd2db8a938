#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace switchid {

// splitmix64; used to derive independent RNG streams from one base seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 1));
}

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level set from SWITCHID_LOG (error|warn|info|debug), default warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("SWITCHID_LOG");
    if (!env) return LogLevel::Warn;
    std::string s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[switchid:%s] %s\n", names[static_cast<int>(level)],
               msg.c_str());
}

inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }

}  // namespace switchid
