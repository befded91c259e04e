#pragma once

// Serial reference path vs OpenMP path. Both produce bit-identical results:
// parallel loops only distribute independent per-item work, and every
// reduction runs afterwards in a fixed order.

namespace spinsc {

enum class Execution { Serial, Parallel };

/// Caps the OpenMP team size for Execution::Parallel (<= 0 restores the default).
void set_thread_limit(int threads);
int thread_limit();

}  // namespace spinsc
