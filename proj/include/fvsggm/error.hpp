#pragma once

#include <stdexcept>
#include <string>

namespace fvsggm {

// Coarse failure classes; the CLI maps them to exit codes 2, 3 and 4.
enum class ErrorKind { Input, Numerical, Resource };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_input(const std::string& what) {
  throw Error(ErrorKind::Input, what);
}
[[noreturn]] inline void throw_numerical(const std::string& what) {
  throw Error(ErrorKind::Numerical, what);
}
[[noreturn]] inline void throw_resource(const std::string& what) {
  throw Error(ErrorKind::Resource, what);
}

}  // namespace fvsggm
