#pragma once

#include <stdexcept>
#include <string>

namespace polar {

// Every failure raised by the library derives from Error. The category
// decides the CLI exit code: numerical failures map to 3, everything else
// the caller can fix by changing inputs maps to 2.
enum class ErrorKind {
  input,
  parse,
  validation,
  composition,
  unsupported,
  state,
  config,
  scale,
  domain,
  numerical,
  timeout,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept {
    return (kind_ == ErrorKind::numerical || kind_ == ErrorKind::timeout) ? 3 : 2;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace polar
