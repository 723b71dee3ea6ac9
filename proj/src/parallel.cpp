#include "tdpauc/parallel.hpp"

#include <omp.h>

namespace tdpauc {

std::string_view to_string(Exec exec) { return exec == Exec::serial ? "serial" : "parallel"; }

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace tdpauc
