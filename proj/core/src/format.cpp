#include "nmt/format.hpp"

#include <charconv>
#include <cmath>

namespace nmt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace nmt
