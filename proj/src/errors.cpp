#include "mvmatern/errors.hpp"

namespace mvm {

const char* errc_code(errc c) {
  switch (c) {
    case errc::args: return "E_ARGS";
    case errc::io: return "E_IO";
    case errc::model: return "E_MODEL";
    case errc::numeric: return "E_NUMERIC";
  }
  return "E_UNKNOWN";
}

}  // namespace mvm
