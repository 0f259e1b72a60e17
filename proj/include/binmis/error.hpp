#ifndef BINMIS_ERROR_HPP
#define BINMIS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace binmis {

// Failure classes. The CLI maps them onto exit codes 2, 3 and 4.
enum class ErrorKind {
  input,           // malformed data, bad configuration, violated preconditions
  identification,  // no first stage, moments inconsistent with the model
  invariant        // internal consistency check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Machine-readable identifier, e.g. "no_first_stage".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline int exit_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
      return 2;
    case ErrorKind::identification:
      return 3;
    case ErrorKind::invariant:
      return 4;
  }
  return 4;
}

}  // namespace binmis

#endif  // BINMIS_ERROR_HPP
