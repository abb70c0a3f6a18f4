#include "rbr/error.hpp"

namespace rbr {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::schema: return "schema";
    case Errc::parse: return "parse";
    case Errc::degenerate_data: return "degenerate_data";
    case Errc::degenerate_neighborhood: return "degenerate_neighborhood";
    case Errc::already_favorable: return "already_favorable";
    case Errc::invalid_bracket: return "invalid_bracket";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::malformed_file: return "malformed_file";
    case Errc::io: return "io";
    case Errc::config: return "config";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace rbr
