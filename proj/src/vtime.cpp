#include "uwf/vtime.hpp"

#include <cmath>
#include <cstdio>

#include "uwf/errors.hpp"

namespace uwf {

VTime vtime_from_seconds(double seconds) {
    return static_cast<VTime>(std::llround(seconds * kMicrosPerSecond));
}

double vtime_to_seconds(VTime t) {
    return static_cast<double>(t) / kMicrosPerSecond;
}

VTime parse_walltime(const std::string& text) {
    int h = 0, m = 0, s = 0;
    char trailing = 0;
    int n = std::sscanf(text.c_str(), "%d:%d:%d%c", &h, &m, &s, &trailing);
    if (n != 3 || h < 0 || m < 0 || m > 59 || s < 0 || s > 59)
        throw Error(Err::BadWalltime, "expected HH:MM:SS, got '" + text + "'");
    return (static_cast<VTime>(h) * 3600 + m * 60 + s) * kMicrosPerSecond;
}

std::string format_vtime(VTime t) {
    bool neg = t < 0;
    if (neg) t = -t;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", neg ? "-" : "",
                  static_cast<long long>(t / kMicrosPerSecond),
                  static_cast<long long>(t % kMicrosPerSecond));
    return buf;
}

}  // namespace uwf
