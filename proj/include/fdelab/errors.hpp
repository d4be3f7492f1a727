#ifndef FDELAB_ERRORS_HPP
#define FDELAB_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace fdelab {

// Bad input or precondition violation.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parameter outside the regime where the problem is well posed.
struct UnsupportedRegime : std::domain_error {
    using std::domain_error::domain_error;
};

// Iterative solver did not converge. Carries the last residual and iterate.
struct NumericalFailure : std::runtime_error {
    double residual = 0.0;
    double suggested_dt = 0.0;
    std::vector<double> last_iterate;

    NumericalFailure(const std::string& what, double res)
        : std::runtime_error(what + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw InvalidArgument(msg);
}

} // namespace fdelab

#endif
