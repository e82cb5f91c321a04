#pragma once

#include <stdexcept>
#include <string>

namespace lagflow {

inline constexpr const char *version_string = "0.1.0";

// A map stopped being (discretely) orientation preserving: non-positive cell
// slope in 1d, non-positive element determinant in 2d, where the energy needs
// a positive one.
struct DegenerateMapError : std::domain_error {
  explicit DegenerateMapError(const std::string &what) : std::domain_error(what) {}
};

// Potential or kernel evaluated where it is not defined (log at the origin).
struct SingularityError : std::domain_error {
  explicit SingularityError(const std::string &what) : std::domain_error(what) {}
};

// Bad argument combinations that are not config-file problems (those get
// collected into validation error lists instead of thrown).
struct InvalidSpecError : std::invalid_argument {
  explicit InvalidSpecError(const std::string &what) : std::invalid_argument(what) {}
};

} // namespace lagflow
