#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fracdyn {

// Input violates an operation's preconditions (bad shapes, ranges, meshes).
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requested accuracy could not be certified; carries the best estimate found.
struct accuracy_error : std::runtime_error {
    accuracy_error(const std::string& msg, std::complex<double> best, double est)
        : std::runtime_error(msg), best_estimate(best), est_error(est) {}
    std::complex<double> best_estimate;
    double est_error;
};

// Spectrum lies outside the admissible sector (or contains zero).
struct sector_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Operation only supports a restricted matrix structure (e.g. diagonal).
struct unsupported_structure_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// No contraction radius exists below the search floor.
struct no_certificate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fracdyn
