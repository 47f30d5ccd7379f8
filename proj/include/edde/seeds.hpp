#pragma once

#include <cstdint>

#include "edde/random.hpp"

namespace edde {

// Every trainer derives member t's streams from the run seed the same way, so
// member 1 of EDDE, the single-model baseline and BANs generation 1 coincide.

inline std::uint64_t member_init_seed(std::uint64_t run_seed, int member) {
    return derive_seed(run_seed, 0x1417, static_cast<std::uint64_t>(member));
}

inline std::uint64_t member_shuffle_seed(std::uint64_t run_seed, int member) {
    return derive_seed(run_seed, 0x5417, static_cast<std::uint64_t>(member));
}

inline std::uint64_t member_bootstrap_seed(std::uint64_t run_seed, int member) {
    return derive_seed(run_seed, 0xb007, static_cast<std::uint64_t>(member));
}

}  // namespace edde
