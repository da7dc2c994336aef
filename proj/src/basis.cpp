#include "oqs/basis.hpp"

#include <algorithm>
#include <bit>

namespace oqs::models {

FermionBasis build_fermion_basis(int sites, int particles) {
    if (sites < 1 || sites > 16)
        throw ModelError("fermion basis: sites must be in [1, 16], got " +
                         std::to_string(sites));
    if (particles < 0 || particles > sites)
        throw ModelError("fermion basis: need 0 <= N <= l, got N = " +
                         std::to_string(particles) + ", l = " + std::to_string(sites));

    FermionBasis basis;
    basis.sites = sites;
    basis.particles = particles;
    const std::uint32_t top = 1u << sites;
    for (std::uint32_t s = 0; s < top; ++s)
        if (std::popcount(s) == particles) basis.states.push_back(s);
    return basis;
}

Index FermionBasis::index_of(std::uint32_t state) const {
    auto it = std::lower_bound(states.begin(), states.end(), state);
    if (it == states.end() || *it != state)
        throw ModelError("fermion basis: pattern not in this sector");
    return static_cast<Index>(it - states.begin());
}

} // namespace oqs::models
