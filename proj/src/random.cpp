#include "phaseshift/random.hpp"

#include <atomic>

namespace phaseshift {

namespace {
std::atomic<unsigned> configured_threads{0};
}

unsigned thread_count() {
  const unsigned n = configured_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(unsigned n) { configured_threads.store(n); }

}  // namespace phaseshift
