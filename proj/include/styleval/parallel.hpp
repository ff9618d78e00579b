#pragma once

namespace styleval::parallel {

// Worker cap for all data-parallel kernels. 1 disables OpenMP dispatch,
// 0 means the OpenMP default. Every kernel produces bit-identical results
// for any setting; this only trades wall time.
void set_jobs(int n);
int jobs();
bool enabled();

}  // namespace styleval::parallel
