#pragma once

#include <string>

namespace rcusum {

// Shortest decimal that parses back to the same double; "nan", "inf",
// "-inf" for non-finite values.
std::string format_number(double v);

}  // namespace rcusum
