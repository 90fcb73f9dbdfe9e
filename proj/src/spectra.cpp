#include "cslat/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cslat {

Eigen::Matrix2cd FiniteLattice::cell_block() const {
    Eigen::Matrix2cd h0;
    h0 << eps_a(), Complex(-params.t, 0.0),  //
        Complex(-params.t, 0.0), eps_b();
    return h0;
}

Eigen::Matrix2cd FiniteLattice::hop_block() const {
    Eigen::Matrix2cd h1;
    h1.setConstant(Complex(-params.d, 0.0));
    return h1;
}

Eigen::MatrixXcd assemble_hamiltonian(const FiniteLattice& fl) {
    fl.validate();
    const int n = fl.n_cells;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    const Eigen::Matrix2cd h0 = fl.cell_block();
    const Eigen::Matrix2cd h1 = fl.hop_block();
    for (int j = 0; j < n; ++j) {
        h.block<2, 2>(2 * j, 2 * j) = h0;
        if (j + 1 < n) {
            h.block<2, 2>(2 * j, 2 * (j + 1)) = h1;
            h.block<2, 2>(2 * (j + 1), 2 * j) = h1.adjoint();
        }
    }
    return h;
}

SpectrumResult eigenvalues(const FiniteLattice& fl, double tol, bool with_vectors) {
    fl.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("eigenvalues: tol must be > 0");
    const Eigen::MatrixXcd h = assemble_hamiltonian(fl);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver;
    solver.compute(h, with_vectors);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceFailure("eigenvalues: QR iteration did not converge for N = " +
                                 std::to_string(fl.n_cells));
    }

    SpectrumResult result;
    const auto& vals = solver.eigenvalues();
    result.eigenvalues.assign(vals.data(), vals.data() + vals.size());

    if (with_vectors) {
        result.eigenvectors = solver.eigenvectors();
        result.residual_norms.resize(result.eigenvalues.size());
        for (Eigen::Index i = 0; i < vals.size(); ++i) {
            const auto v = result.eigenvectors->col(i);
            const double res = (h * v - vals[i] * v).norm() / v.norm();
            result.residual_norms[static_cast<std::size_t>(i)] = res;
            if (!(res <= tol)) {
                std::ostringstream msg;
                msg << "eigenvalues: residual " << res << " exceeds tolerance " << tol
                    << " for eigenvalue " << vals[i];
                throw ConvergenceFailure(msg.str());
            }
        }
    }
    return result;
}

namespace {

// Assigns the tracked pair to the two eigenvalues minimizing the total matched
// distance.  Lost when a jump exceeds the continuity bound, or when a third
// eigenvalue inside the bound offers a genuinely different continuation
// (farther than the coalescence threshold from the chosen one).  A bound
// violation on the seed match is a precondition failure, not a lost track.
std::array<Complex, 2> match_pair(const std::array<Complex, 2>& prev,
                                  const std::vector<Complex>& eigs,
                                  const EpTraceOptions& opt, double gamma,
                                  bool seeding = false) {
    const std::size_t n = eigs.size();
    if (n < 2) throw TrackingLost("match_pair: fewer than two eigenvalues");

    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = std::abs(prev[0] - eigs[i]);
        if (da >= best) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double total = da + std::abs(prev[1] - eigs[j]);
            if (total < best) {
                best = total;
                bi = i;
                bj = j;
            }
        }
    }

    auto fail = [gamma](const std::string& why) {
        std::ostringstream msg;
        msg << "trace_pair_vs_gamma: " << why << " at gamma = " << gamma
            << "; refine the gamma grid";
        throw TrackingLost(msg.str());
    };

    if (std::abs(prev[0] - eigs[bi]) > opt.continuity_bound ||
        std::abs(prev[1] - eigs[bj]) > opt.continuity_bound) {
        if (seeding) {
            throw std::invalid_argument(
                "trace_pair_vs_gamma: seed pair does not match the spectrum at "
                "gamma_grid[0] within the continuity bound");
        }
        fail("eigenvalue jump exceeds the continuity bound");
    }
    for (std::size_t m = 0; m < n; ++m) {
        if (m == bi || m == bj) continue;
        if (std::abs(prev[0] - eigs[m]) <= opt.continuity_bound &&
            std::abs(eigs[m] - eigs[bi]) > opt.coalescence_threshold) {
            fail("ambiguous continuation (two candidates within the continuity bound)");
        }
        if (std::abs(prev[1] - eigs[m]) <= opt.continuity_bound &&
            std::abs(eigs[m] - eigs[bj]) > opt.coalescence_threshold) {
            fail("ambiguous continuation (two candidates within the continuity bound)");
        }
    }
    return {eigs[bi], eigs[bj]};
}

std::vector<Complex> solve_at_gamma(const FiniteLattice& tmpl, double gamma) {
    FiniteLattice fl = tmpl;
    fl.params.gamma = gamma;
    return eigenvalues(fl, 1e-8, /*with_vectors=*/false).eigenvalues;
}

bool is_split(const std::array<Complex, 2>& pair, double onset) {
    return std::abs(pair[0].imag() - pair[1].imag()) > onset;
}

}  // namespace

EpTrace trace_pair_vs_gamma(const FiniteLattice& fl_template,
                            const std::vector<double>& gamma_grid,
                            std::array<Complex, 2> seed_pair, const EpTraceOptions& opt) {
    fl_template.validate();
    if (gamma_grid.size() < 2) {
        throw std::invalid_argument("trace_pair_vs_gamma: need at least two grid points");
    }
    for (std::size_t i = 1; i < gamma_grid.size(); ++i) {
        if (!(gamma_grid[i] > gamma_grid[i - 1])) {
            throw std::invalid_argument("trace_pair_vs_gamma: grid must be strictly increasing");
        }
    }

    EpTrace trace;
    trace.gamma = gamma_grid;
    trace.pair.reserve(gamma_grid.size());

    std::array<Complex, 2> cur = match_pair(seed_pair, solve_at_gamma(fl_template, gamma_grid[0]),
                                            opt, gamma_grid[0], /*seeding=*/true);
    trace.pair.push_back(cur);

    for (std::size_t i = 1; i < gamma_grid.size(); ++i) {
        cur = match_pair(cur, solve_at_gamma(fl_template, gamma_grid[i]), opt, gamma_grid[i]);
        trace.pair.push_back(cur);
    }

    // Locate the coalescence: the first grid bracket where the pair acquires a
    // conjugate-split imaginary part, then bisect in gamma.
    const double onset = opt.coalescence_threshold;
    std::optional<std::size_t> bracket;
    for (std::size_t i = 1; i < trace.pair.size(); ++i) {
        if (!is_split(trace.pair[i - 1], onset) && is_split(trace.pair[i], onset)) {
            bracket = i;
            break;
        }
    }

    if (!bracket) {
        // Possibly already coalesced exactly on a grid point.
        for (std::size_t i = 0; i < trace.pair.size(); ++i) {
            if (std::abs(trace.pair[i][0] - trace.pair[i][1]) <= opt.coalescence_threshold) {
                trace.ep_gamma = gamma_grid[i];
                trace.ep_energy = (trace.pair[i][0] + trace.pair[i][1]) / 2.0;
                break;
            }
        }
        return trace;
    }

    double lo = gamma_grid[*bracket - 1];
    double hi = gamma_grid[*bracket];
    std::array<Complex, 2> pair_lo = trace.pair[*bracket - 1];
    std::array<Complex, 2> best_pair = trace.pair[*bracket];
    while (hi - lo > opt.gamma_resolution) {
        const double mid = 0.5 * (lo + hi);
        const auto pm = match_pair(pair_lo, solve_at_gamma(fl_template, mid), opt, mid);
        if (std::abs(pm[0] - pm[1]) < std::abs(best_pair[0] - best_pair[1])) {
            best_pair = pm;
        }
        if (is_split(pm, onset)) {
            hi = mid;
        } else {
            lo = mid;
            pair_lo = pm;
        }
    }
    trace.ep_gamma = 0.5 * (lo + hi);
    trace.ep_energy = (best_pair[0] + best_pair[1]) / 2.0;
    return trace;
}

}  // namespace cslat
