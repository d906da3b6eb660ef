#pragma once

// FFTW plan creation and destruction are not thread-safe; every translation
// unit that plans must serialize on this one mutex. Execution of a built plan
// is safe without it.

#include <mutex>

namespace mvm::detail {

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace mvm::detail
