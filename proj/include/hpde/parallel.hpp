#pragma once

#include <cstdint>

namespace hpde {

enum class Exec { serial, openmp };

// Data-parallel loop over [0, count). Every body writes only to its own
// slots, so the OpenMP path is bit-identical to the serial one; tests
// assert that. schedule(static) keeps the partition deterministic.
template <typename Body>
void parallel_for(std::int64_t count, Exec mode, Body&& body) {
    if (mode == Exec::openmp) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) body(i);
    } else {
        for (std::int64_t i = 0; i < count; ++i) body(i);
    }
}

}  // namespace hpde
