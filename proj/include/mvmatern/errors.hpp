#pragma once

#include <stdexcept>
#include <string>

namespace mvm {

// Error taxonomy shared by the library and the CLI. Each category maps to a
// stable machine-parsable code and a distinct process exit status.
enum class errc {
  args = 2,     // bad flags / malformed request
  io = 3,       // file not found, parse failure, write failure
  model = 4,    // invalid parameter set or model/data mismatch
  numeric = 5,  // domain error, overflow, non-convergence, factorization failure
};

const char* errc_code(errc c);  // "E_ARGS", "E_IO", "E_MODEL", "E_NUMERIC"

class error : public std::runtime_error {
 public:
  error(errc c, const std::string& msg) : std::runtime_error(msg), c_(c) {}
  errc category() const { return c_; }
  const char* code() const { return errc_code(c_); }
  int exit_status() const { return static_cast<int>(c_); }

 private:
  errc c_;
};

[[noreturn]] inline void fail(errc c, const std::string& msg) { throw error(c, msg); }

}  // namespace mvm
