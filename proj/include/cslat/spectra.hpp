#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cslat/types.hpp"

namespace cslat {

/// Open cross-stitch chain of N unit cells.  `overall_loss` is the uniform
/// imaginary shift Gamma applied as -i*Gamma to every lattice site, so the
/// on-site energies become -i*Gamma +- (delta/2 + i*gamma/2).
struct FiniteLattice {
    int n_cells = 1;
    LatticeParams params;
    double overall_loss = 0.0;

    FiniteLattice() = default;
    FiniteLattice(int n, LatticeParams p, double gamma_overall = 0.0)
        : n_cells(n), params(p), overall_loss(gamma_overall) {
        validate();
    }

    void validate() const {
        params.validate();
        if (n_cells < 1) throw std::invalid_argument("FiniteLattice: n_cells must be >= 1");
        if (!(std::isfinite(overall_loss)) || overall_loss < 0.0) {
            throw std::invalid_argument("FiniteLattice: overall_loss must be finite and >= 0");
        }
    }

    Complex eps_a() const { return params.eps_a() - Complex(0.0, overall_loss); }
    Complex eps_b() const { return params.eps_b() - Complex(0.0, overall_loss); }
    Eigen::Matrix2cd cell_block() const;   // H0 = [[eps_a, -t], [-t, eps_b]]
    Eigen::Matrix2cd hop_block() const;    // H1 = -d * [[1, 1], [1, 1]]
};

/// 2N x 2N block-tridiagonal Hamiltonian with open boundaries: H0 on the
/// diagonal, H1 above, H1^dagger below.
Eigen::MatrixXcd assemble_hamiltonian(const FiniteLattice& fl);

struct SpectrumResult {
    std::vector<Complex> eigenvalues;              // all 2N of them
    std::vector<double> residual_norms;            // ||H v - eps v|| / ||v||, per pair
    std::optional<Eigen::MatrixXcd> eigenvectors;  // columns, when requested
};

/// Dense general-complex eigensolve (Hessenberg reduction + shifted QR via
/// Eigen's ComplexEigenSolver; no Hermiticity assumed anywhere).  When
/// with_vectors is set, every eigenpair residual must satisfy
/// ||H v - eps v|| / ||v|| <= tol or ConvergenceFailure is thrown; the same
/// error reports QR non-convergence.
SpectrumResult eigenvalues(const FiniteLattice& fl, double tol = 1e-8,
                           bool with_vectors = true);

struct EpTraceOptions {
    /// Max distance an eigenvalue may move between adjacent grid points.
    double continuity_bound = 0.05;
    /// Pair distance below which the pair counts as coalesced; also the
    /// separation below which near-degenerate candidates are interchangeable.
    double coalescence_threshold = 1e-7;
    /// Bisection stops when the gamma bracket is narrower than this.
    double gamma_resolution = 1e-9;
};

struct EpTrace {
    std::vector<double> gamma;
    std::vector<std::array<Complex, 2>> pair;  // tracked pair per grid point
    std::optional<double> ep_gamma;
    std::optional<Complex> ep_energy;
};

/// Follows two eigenvalues of the finite chain across a strictly increasing
/// gamma grid by nearest-neighbour matching in the complex plane.  Reports the
/// EP (if the pair coalesces inside the grid) refined by bisection in gamma.
/// Throws TrackingLost when a genuinely different continuation lies within the
/// continuity bound of a tracked value, i.e. the matching is ambiguous and the
/// caller must refine the grid.
EpTrace trace_pair_vs_gamma(const FiniteLattice& fl_template,
                            const std::vector<double>& gamma_grid,
                            std::array<Complex, 2> seed_pair,
                            const EpTraceOptions& opt = {});

}  // namespace cslat
