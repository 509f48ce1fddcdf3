#pragma once

namespace kagg {

/// Number of OpenMP threads parallel regions will use (1 without OpenMP).
int max_threads();
/// Sets the OpenMP thread count; n <= 0 restores the runtime default.
void set_threads(int n);

}  // namespace kagg
