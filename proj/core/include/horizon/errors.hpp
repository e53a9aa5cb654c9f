#ifndef HORIZON_ERRORS_HPP
#define HORIZON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace horizon {

// Bad user input: malformed files, out-of-range parameters, violated
// preconditions. The CLI maps this to exit code 1; any other exception
// is reported as a runtime failure with exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what_arg)
      : std::runtime_error(what_arg) {}
};

}  // namespace horizon

#endif  // HORIZON_ERRORS_HPP
