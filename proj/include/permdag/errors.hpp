#pragma once

#include <stdexcept>
#include <string>

namespace permdag {

// Bad inputs: shape mismatches, invalid permutations, out-of-range config.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Every Monte Carlo weight underflowed to -inf, even after the retry pass.
// Carries enough context to tell which estimator died and where.
class degeneracy_error : public std::runtime_error {
public:
    degeneracy_error(const std::string& what_failed, int samples, double max_log_weight)
        : std::runtime_error(what_failed + ": all " + std::to_string(samples) +
                             " sample weights are -inf (max log weight " +
                             std::to_string(max_log_weight) + ")"),
          samples_(samples) {}
    int samples() const { return samples_; }

private:
    int samples_;
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace permdag
