#pragma once

#include <string>

namespace ntm {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_shortest(double value);
/// Fixed-point text with `decimals` digits after the point ("C" locale).
std::string format_fixed(double value, int decimals);

}  // namespace ntm
