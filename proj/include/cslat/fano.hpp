#pragma once

#include <Eigen/Dense>

#include "cslat/spectra.hpp"
#include "cslat/types.hpp"

namespace cslat {

/// Detangled representation of the cross-stitch chain: a 1D chain of states
/// p_n = (a_n + b_n)/sqrt(2) with hopping strength 2d (matrix element -2d),
/// plus one side-coupled Fano state f_n = (a_n - b_n)/sqrt(2) per cell.
/// With eps_pm = (eps_a +- eps_b)/2, the chain sits at eps_plus - t, the Fano
/// states at eps_plus + t, and the chain-Fano coupling is eps_minus
/// (= delta/2 + i gamma/2 for the PT lattice).
struct FanoChain {
    int n_cells = 1;
    Complex chain_onsite;
    Complex fano_onsite;
    double chain_hopping = 0.0;  // strength 2d; matrix element is -2d
    Complex coupling;
};

/// Per-cell rotation of the lattice by (1/sqrt(2)) [[1, 1], [1, -1]].
FanoChain detangle(const FiniteLattice& fl);

/// 2N x 2N Hamiltonian of the detangled chain, (p_n, f_n) ordering per cell.
Eigen::MatrixXcd fano_hamiltonian(const FanoChain& chain);

struct EquivalenceReport {
    int n_cells = 0;
    double max_pairing_distance = 0.0;
    bool passed = false;
};

/// Checks that the original and detangled Hamiltonians share their eigenvalue
/// multiset (they are related by a unitary similarity): eigensolves both,
/// pairs eigenvalues greedily by nearest distance, and reports the worst pair.
/// Throws EquivalenceFailure when the worst pairing distance exceeds tol.
EquivalenceReport verify_equivalence(const FiniteLattice& fl, double tol = 1e-9);

}  // namespace cslat
