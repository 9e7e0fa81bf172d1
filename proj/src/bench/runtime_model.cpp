#include "uwf/bench/runtime_model.hpp"

#include <sstream>

#include "uwf/errors.hpp"
#include "uwf/kvconfig.hpp"

namespace uwf::bench {

double RuntimeModel::runtime_seconds(int cores) const {
    if (cores < 1) throw Error(Err::ConfigError, "runtime model wants cores >= 1");
    return t1 * (serial_fraction + (1.0 - serial_fraction) / cores) +
           overhead_per_core * (cores - 1);
}

RuntimeModel RuntimeModel::parse(const std::string& text) {
    RuntimeModel m;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        size_t eq = part.find('=');
        if (eq == std::string::npos)
            throw Error(Err::ConfigError, "model term wants key=value: " + part);
        std::string key = part.substr(0, eq);
        double value = parse_double_strict(part.substr(eq + 1), "model " + key);
        if (key == "t1")
            m.t1 = value;
        else if (key == "f")
            m.serial_fraction = value;
        else if (key == "beta")
            m.overhead_per_core = value;
        else
            throw Error(Err::ConfigError, "unknown model term: " + key);
    }
    if (m.t1 <= 0 || m.serial_fraction < 0 || m.serial_fraction > 1 || m.overhead_per_core < 0)
        throw Error(Err::ConfigError, "model out of range");
    return m;
}

}  // namespace uwf::bench
