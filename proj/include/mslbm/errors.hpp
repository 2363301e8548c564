#ifndef MSLBM_ERRORS_HPP
#define MSLBM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mslbm {

// Base class for everything thrown by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or inputs violating a documented precondition.
class invalid_parameter : public error {
public:
    using error::error;
};

// An iterative solver failed to converge or produced non-finite iterates.
class solver_failure : public error {
public:
    solver_failure(const std::string& msg, double residual = 0.0, int iteration = -1)
        : error(msg), residual(residual), iteration(iteration) {}
    double residual;
    int iteration;
};

// Every point of a tuning grid failed.
class tuning_failure : public error {
public:
    using error::error;
};

// Malformed file contents; message carries line number or byte offset.
class parse_error : public error {
public:
    using error::error;
};

// Filesystem-level failure (missing file, unwritable directory).
class io_error : public error {
public:
    using error::error;
};

// Input data contradicts itself (e.g. marginals not matching counts).
class inconsistency_error : public error {
public:
    using error::error;
};

// A matrix had lower numerical rank than the operation requires.
class rank_deficiency : public error {
public:
    using error::error;
};

// Correlation undefined because one argument has zero rank variance.
class undefined_correlation : public error {
public:
    using error::error;
};

}  // namespace mslbm

#endif
