#pragma once

#include <string>

namespace ghostmap {

/// Fixed-point text for CSV/JSON output. Locale-independent and stable
/// across runs, which matters for byte-identical reruns.
std::string fixed(double value, int digits);

}  // namespace ghostmap
