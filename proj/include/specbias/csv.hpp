#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace specbias::csv {

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format(double value);

/// Splits one CSV line on commas (no quoting; our files never need it).
std::vector<std::string> split(std::string_view line);

} // namespace specbias::csv
