#pragma once

#include <cstddef>
#include <string_view>

namespace tdpauc {

// Selects between the OpenMP kernels and a single-threaded run of the same
// code. Results never depend on this choice: every parallel loop writes to
// disjoint slots and reductions happen serially afterwards.
enum class Exec { serial, parallel };

std::string_view to_string(Exec exec);

// Thin wrappers so callers do not need <omp.h>.
int max_threads();
void set_threads(int n);

}  // namespace tdpauc
