#pragma once

#include <stdexcept>
#include <string>

namespace ggbm {

// Requested tolerance cannot be met in the supported range. Never used to
// silently degrade a result.
class tolerance_error : public std::runtime_error {
  public:
    explicit tolerance_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical machinery failed (Cholesky after jitter, embedding eigenvalues,
// quadrature non-convergence). Message carries the diagnostic.
class numerical_error : public std::runtime_error {
  public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ggbm
