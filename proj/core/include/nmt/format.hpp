#pragma once

#include <string>

namespace nmt {

// Shortest decimal form that round-trips the exact double (std::to_chars).
// Used everywhere numbers land in text files so reruns are byte-identical.
std::string format_double(double v);

}  // namespace nmt
