// basis.hpp — Fixed particle-number occupation basis for a spinless fermion chain

#pragma once

#include <cstdint>
#include <vector>

#include "oqs/types.hpp"

namespace oqs::models {

// Occupation-number basis for N spinless fermions on l sites.
// Bit convention: site 1 is the least significant bit of the pattern.
// States are sorted ascending as integers, which fixes all matrix elements.
struct FermionBasis {
    int sites{0};
    int particles{0};
    std::vector<std::uint32_t> states; // strictly increasing bit patterns

    Index dim() const { return static_cast<Index>(states.size()); }

    bool occupied(std::uint32_t state, int site) const {
        return (state >> (site - 1)) & 1u;
    }

    // Index of a pattern in the basis; throws if absent
    Index index_of(std::uint32_t state) const;
};

FermionBasis build_fermion_basis(int sites, int particles);

} // namespace oqs::models
