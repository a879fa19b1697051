#pragma once

namespace bsdelay {

/// Kernel execution mode. Parallel kernels partition work by path index so
/// that serial and parallel runs produce bit-identical results.
enum class Execution {
    Serial,
    Parallel,
};

}  // namespace bsdelay
