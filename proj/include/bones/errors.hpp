#pragma once

#include <stdexcept>
#include <string>

namespace bones {

// Bad input or a combinatorial condition that cannot hold.
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// A numerical procedure failed to converge or left its region.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A lap or breakpoint budget was exceeded.
struct budget_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bones
