#pragma once

#include <stdexcept>
#include <string>

namespace rovi {

// One exception type with a coarse code so the C boundary can map errors to
// status values without parsing messages.
class Error : public std::runtime_error {
 public:
  enum class Code { InvalidArgument = 1, Config = 2, Numeric = 3, Io = 4 };

  Error(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

inline Error invalid_argument_error(const std::string& msg) {
  return Error(Error::Code::InvalidArgument, msg);
}
inline Error config_error(const std::string& msg) {
  return Error(Error::Code::Config, msg);
}
inline Error numeric_error(const std::string& msg) {
  return Error(Error::Code::Numeric, msg);
}
inline Error io_error(const std::string& msg) {
  return Error(Error::Code::Io, msg);
}

}  // namespace rovi
