#pragma once

#include <stdexcept>
#include <string>

namespace ow {

// Invalid user input: graph parameters, densities, config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A firing or move that the dynamics does not allow.
class IllegalOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Two graphs that were expected to share vertex labels and neighbor order do not.
class MappingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear system with no escape from the killing set.
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ow
