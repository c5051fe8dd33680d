#pragma once

#include <stdexcept>
#include <string>

namespace geokm {

// Malformed configuration: bad topology, unparsable g-spec, out-of-range
// parameters. CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A theorem hypothesis does not hold for the given data (bad lambda schedule,
// k-sum over budget, recurrence violated). Names the offending index.
struct hypothesis_error : std::runtime_error {
    explicit hypothesis_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A recorded trace is inconsistent with its own generating rule.
struct integrity_error : std::runtime_error {
    explicit integrity_error(const std::string& msg) : std::runtime_error(msg) {}
};

// An exact computation would exceed the step/size budget. Raised instead of
// ever returning a truncated or rounded value.
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Verified hypotheses but no guaranteed witness worked. Firing would mean the
// underlying theorem is false; it exists so that possibility is loud.
struct counterexample_error : std::runtime_error {
    explicit counterexample_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Floating-point blow-up (non-finite coordinate) during iteration.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace geokm
