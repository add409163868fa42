#pragma once

#include <stdexcept>
#include <string>

namespace metabound {

// Every precondition or input failure in the library surfaces as this type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace metabound
