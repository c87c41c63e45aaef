#pragma once

#include <stdexcept>
#include <string>

namespace tvslab {

struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct UnsupportedParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tvslab
