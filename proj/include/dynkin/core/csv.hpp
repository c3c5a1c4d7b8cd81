#pragma once

// CSV formatting shared by every exporter. Doubles use the shortest
// round-trip representation so identical values always print identically.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dynkin::csv {

inline std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::string_view s) { return std::string(s); }

/// "# key=value" provenance lines.
struct Header {
  std::vector<std::pair<std::string, std::string>> entries;

  Header& add(std::string key, std::string value) {
    entries.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  Header& add(std::string key, double value) { return add(std::move(key), format(value)); }
  Header& add_int(std::string key, std::uint64_t value) {
    return add(std::move(key), std::to_string(value));
  }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : entries) os << "# " << k << '=' << v << '\n';
  }
};

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

}  // namespace dynkin::csv
