#pragma once

#include <cstdint>
#include <string>

namespace uwf {

// Virtual time in integer microseconds. Integer arithmetic keeps event
// ordering and CSV output bit-stable across runs.
using VTime = std::int64_t;

constexpr VTime kMicrosPerSecond = 1'000'000;

VTime vtime_from_seconds(double seconds);
double vtime_to_seconds(VTime t);

// "HH:MM:SS" -> microseconds. Hours may exceed two digits.
VTime parse_walltime(const std::string& text);

// Fixed-point "s.uuuuuu" rendering, no locale or float formatting involved.
std::string format_vtime(VTime t);

}  // namespace uwf
