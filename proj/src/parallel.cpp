#include "kanele/parallel.hpp"

#include <atomic>

namespace kanele {

namespace {
std::atomic<unsigned> g_threads{1};
}

unsigned default_threads() noexcept { return g_threads.load(); }

void set_default_threads(unsigned n) noexcept {
  g_threads.store(n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n);
}

}  // namespace kanele
