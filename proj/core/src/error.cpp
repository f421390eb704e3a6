#include "fm/error.hpp"

namespace fm {

SolverError::SolverError(const std::string& what, double residual)
    : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

}  // namespace fm
