#pragma once

#include <string>

namespace uwf::bench {

// Parametric stand-in for one ensemble member's runtime at c cores:
//   T(c) = t1 * (f + (1 - f) / c) + beta * (c - 1)
// an Amdahl term plus a linear per-core overhead. Defaults are calibrated so
// the published strategy orderings hold on the simulated machine.
struct RuntimeModel {
    double t1 = 512.0;
    double serial_fraction = 0.01;
    double overhead_per_core = 0.02;

    double runtime_seconds(int cores) const;

    // Parses "t1=512,f=0.01,beta=0.02"; unknown keys are an error.
    static RuntimeModel parse(const std::string& text);
};

}  // namespace uwf::bench
