#pragma once

// Process-wide warning channel. Numerical routines report recoverable
// oddities (clamped round-off, widened tolerances) here instead of failing.

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace dynkin {

using WarningSink = std::function<void(const std::string&)>;

namespace detail {
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
inline WarningSink& warning_sink_ref() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}
}  // namespace detail

/// Replaces the sink; returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(detail::warning_mutex());
  return std::exchange(detail::warning_sink_ref(), std::move(sink));
}

inline void warn(const std::string& msg) {
  std::lock_guard lock(detail::warning_mutex());
  if (detail::warning_sink_ref()) detail::warning_sink_ref()(msg);
}

}  // namespace dynkin
