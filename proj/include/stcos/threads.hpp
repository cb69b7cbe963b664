#pragma once

namespace stcos::threads {

// Worker count used by the OpenMP kernels. 1 runs everything serially.
// Kernels are written so results are bitwise identical for any count.
int count();
void set_count(int n);
int hardware();

} // namespace stcos::threads
