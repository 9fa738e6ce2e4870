#pragma once

#include <mutex>

namespace bloch {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_plan_mutex();

}  // namespace bloch
