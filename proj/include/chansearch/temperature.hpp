#pragma once

#include <cmath>

#include "diffcore/errors.hpp"

namespace chansearch {

// Exponential decay tau0 -> tau_min over the schedule; monotone
// non-increasing in step.
inline double temperature(int step, int total_steps, double tau0, double tau_min) {
    if (!(tau0 > tau_min && tau_min > 0.0))
        throw diffcore::ConfigError("temperature: need tau0 > tau_min > 0");
    if (step < 0 || total_steps < 1 || step > total_steps)
        throw diffcore::ConfigError("temperature: need 0 <= step <= total_steps");
    return tau0 * std::pow(tau_min / tau0, double(step) / double(total_steps));
}

}  // namespace chansearch
