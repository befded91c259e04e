#include "spinsc/execution.hpp"

#include <omp.h>

namespace spinsc {

namespace {
int g_limit = 0;
}

void set_thread_limit(int threads) {
  static const int defaultThreads = omp_get_max_threads();
  g_limit = threads > 0 ? threads : 0;
  omp_set_num_threads(g_limit > 0 ? g_limit : defaultThreads);
}

int thread_limit() { return g_limit > 0 ? g_limit : omp_get_max_threads(); }

}  // namespace spinsc
