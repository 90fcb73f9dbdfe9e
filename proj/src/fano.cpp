#include "cslat/fano.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <vector>

namespace cslat {

FanoChain detangle(const FiniteLattice& fl) {
    fl.validate();
    const Complex eps_plus = (fl.eps_a() + fl.eps_b()) / 2.0;
    const Complex eps_minus = (fl.eps_a() - fl.eps_b()) / 2.0;
    FanoChain chain;
    chain.n_cells = fl.n_cells;
    chain.chain_onsite = eps_plus - fl.params.t;
    chain.fano_onsite = eps_plus + fl.params.t;
    chain.chain_hopping = 2.0 * fl.params.d;
    chain.coupling = eps_minus;
    return chain;
}

Eigen::MatrixXcd fano_hamiltonian(const FanoChain& chain) {
    const int n = chain.n_cells;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        const int p = 2 * j, f = 2 * j + 1;
        h(p, p) = chain.chain_onsite;
        h(f, f) = chain.fano_onsite;
        h(p, f) = chain.coupling;
        h(f, p) = chain.coupling;
        if (j + 1 < n) {
            h(p, p + 2) = -chain.chain_hopping;
            h(p + 2, p) = -chain.chain_hopping;
        }
    }
    return h;
}

namespace {

// Greedy nearest-neighbour pairing of two complex multisets; returns the
// largest matched distance.
double pairing_distance(std::vector<Complex> a, std::vector<Complex> b) {
    double worst = 0.0;
    std::vector<bool> used(b.size(), false);
    for (const Complex& va : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            const double dist = std::abs(va - b[j]);
            if (dist < best) {
                best = dist;
                arg = j;
            }
        }
        used[arg] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

EquivalenceReport verify_equivalence(const FiniteLattice& fl, double tol) {
    fl.validate();
    const SpectrumResult original = eigenvalues(fl, 1e-8, /*with_vectors=*/false);
    const Eigen::MatrixXcd hf = fano_hamiltonian(detangle(fl));

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver;
    solver.compute(hf, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceFailure("verify_equivalence: eigensolve of the detangled chain failed");
    }
    std::vector<Complex> detangled(solver.eigenvalues().data(),
                                   solver.eigenvalues().data() + solver.eigenvalues().size());

    EquivalenceReport report;
    report.n_cells = fl.n_cells;
    report.max_pairing_distance = pairing_distance(original.eigenvalues, detangled);
    report.passed = report.max_pairing_distance <= tol;
    if (!report.passed) {
        std::ostringstream msg;
        msg << "verify_equivalence: spectra differ, max pairing distance "
            << report.max_pairing_distance << " > tol " << tol;
        throw EquivalenceFailure(msg.str());
    }
    return report;
}

}  // namespace cslat
