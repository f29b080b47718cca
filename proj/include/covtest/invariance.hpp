#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "covtest/detectors.hpp"

namespace covtest {

enum class GroupKind { correlation, sphericity };

const char* to_string(GroupKind k);

// Natural group for a detector's test family.
GroupKind group_for(DetectorId id);

// One transformation from the invariance group.
//   correlation: x -> P G x, a block permutation plus one invertible N-by-N
//     transform per vector. x'_k = blocks[perm[k]] * x_{perm[k]}.
//   sphericity:  x -> (Q kron G) x, one L-by-L unitary mixing the vectors and
//     one shared invertible N-by-N transform.
struct GroupElement {
    GroupKind kind = GroupKind::correlation;
    BlockGeometry geometry;
    std::vector<std::size_t> perm;       // correlation only
    std::vector<ComplexMatrix> blocks;   // L matrices (correlation) or 1 (sphericity)
    ComplexMatrix unitary;               // sphericity only
};

GroupElement identity_group_element(GroupKind kind, BlockGeometry geometry);

// correlation: uniform random permutation plus Gaussian blocks, redrawn while
// |det| < 1e-9 (at most 100 attempts, then DegenerateDrawError).
// sphericity: Haar unitary via phase-corrected QR of a Gaussian matrix, plus
// one Gaussian block with the same rejection rule.
GroupElement random_group_element(GroupKind kind, BlockGeometry geometry,
                                  std::uint64_t seed, std::uint64_t stream = 0);

SampleSet apply_group(const GroupElement& g, const SampleSet& data);

// Dense L*N transform matrix of the element, for transport oracles.
ComplexMatrix group_transform_matrix(const GroupElement& g);

struct InvarianceReport {
    DetectorId detector;
    GroupKind group;
    std::size_t trials = 0;
    double max_rel_dev = 0.0;
    bool pass = false;
};

// Evaluates |T(g(x)) - T(x)| / |T(x)| over random group elements.
InvarianceReport check_invariance(DetectorId id, const SampleSet& data, GroupKind kind,
                                  std::size_t trials, std::uint64_t seed,
                                  double rel_tol = 1e-8);

// Reduced form of the coherence matrix under the correlation group:
// canonical vector ordering, SVD of the (1,2) block, LQ of the remaining
// first-row blocks, and a deterministic pinning of the residual diagonal
// phases so the result is constant on group orbits.
struct MaximalInvariant {
    std::vector<double> xi12;                 // canonical correlations, descending in [0,1]
    std::vector<ComplexMatrix> l_blocks;      // blocks (1,l), l = 3..L, lower triangular
    // blocks (k,l) for 2 <= k < l <= L, l >= 3, in lexicographic order
    std::vector<std::tuple<std::size_t, std::size_t, ComplexMatrix>> cross_blocks;
    std::vector<std::size_t> ordering;        // canonical order of the original vectors
    bool degenerate = false;
};

MaximalInvariant maximal_invariant(const ComplexMatrix& c_hat, BlockGeometry geometry);

// Component vector (xi, then l_blocks, then cross blocks, row-major).
std::vector<cdouble> flatten(const MaximalInvariant& mi);

// Largest componentwise absolute difference.
double component_distance(const MaximalInvariant& a, const MaximalInvariant& b);

}  // namespace covtest
