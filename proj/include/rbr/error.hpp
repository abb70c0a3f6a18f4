#pragma once

#include <stdexcept>
#include <string>

namespace rbr {

// Values mirror rbr_status in rbr.h; keep them in sync.
enum class Errc {
  invalid_argument = 1,
  schema = 2,
  parse = 3,
  degenerate_data = 4,
  degenerate_neighborhood = 5,
  already_favorable = 6,
  invalid_bracket = 7,
  version_mismatch = 8,
  malformed_file = 9,
  io = 10,
  config = 11,
  internal = 12,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(Errc::invalid_argument, what);
}

}  // namespace rbr
