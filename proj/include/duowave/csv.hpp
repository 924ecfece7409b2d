#pragma once

#include <charconv>
#include <complex>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

namespace duowave::csv {

// Shortest representation that parses back to the same double.
inline std::string num(double v)
{
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline void header(std::ostream& os, const std::vector<std::string>& cols)
{
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline void row(std::ostream& os, const std::vector<double>& vals)
{
  for (std::size_t i = 0; i < vals.size(); ++i) os << (i ? "," : "") << num(vals[i]);
  os << '\n';
}

} // namespace duowave::csv
