#include "stcos/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stcos::threads {

namespace {
int g_count = 0; // 0 = not set yet, resolve lazily from the runtime
}

int hardware() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int count() {
    if (g_count <= 0) g_count = hardware();
    return g_count;
}

void set_count(int n) {
    g_count = n < 1 ? 1 : n;
}

} // namespace stcos::threads
