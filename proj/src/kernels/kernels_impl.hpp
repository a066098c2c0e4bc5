#pragma once
// Per-ISA kernel tables. Each table is defined in its own translation unit
// so that only that unit is compiled with the matching target flags.

#include "motionbank/kernels.hpp"

namespace mb::kernels::detail {

const KernelTable* scalar_table();
// Null when the variant was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

}  // namespace mb::kernels::detail
