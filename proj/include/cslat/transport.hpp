#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cslat/spectra.hpp"
#include "cslat/types.hpp"

namespace cslat {

/// Semi-infinite lead parameters: hopping V0/2 inside the leads, coupling g
/// between the end unit cells (both a- and b-sites) and the leads.
struct LeadParams {
    double v0 = 10.0;
    double g = 1.0;

    LeadParams() = default;
    LeadParams(double v0_, double g_) : v0(v0_), g(g_) { validate(); }

    void validate() const {
        if (!(std::isfinite(v0) && v0 > 0.0)) {
            throw std::invalid_argument("LeadParams: V0 must be finite and > 0");
        }
        if (!std::isfinite(g)) throw std::invalid_argument("LeadParams: g must be finite");
    }
};

/// Lead Bloch phases e^{+-iq} solving E = -V0 cos q:
///   e^{+-iq} = -E/V0 +- i sqrt(1 - (E/V0)^2)
/// with the principal complex square root.  For real |E| <= V0 this is the
/// unimodular propagating phase with Im(e^{iq}) >= 0 (right-moving incident
/// wave); elsewhere it is the analytic continuation of the same branch, and
/// `propagating` flags whether |e^{iq}| = 1 within 1e-9.
struct LeadPhase {
    Complex e_plus_iq;
    Complex e_minus_iq;
    Complex q;
    bool propagating = false;
};
LeadPhase lead_phase(Complex incident_energy, const LeadParams& lead);

/// Bordered block-tridiagonal scattering system of the two-lead chain, with
/// unknown vector (r0, a_1, ..., a_N, t0) of size 2N+2:
///
///   row 0:        V0/2 * r0  - g * (a_1^a + a_1^b)                  = -V0/2
///   cell rows j:  G2p * r0|t0 + H1+ a_{j-1} + (H0 - E) a_j + H1 a_{j+1}
///                 (rhs G2m on the first cell, 0 elsewhere)
///   last row:     -g * (a_N^a + a_N^b) + V0/2 * t0                  = 0
///
/// with G1 = -g (1 1) and G2+- = -+ g e^{+-iq} (1 1)^T.
///
/// A uniform on-site loss Gamma (fl.overall_loss) is algebraically a shift of
/// the incident energy, H0(Gamma) - E = H0(0) - (E + i Gamma); the assembler
/// uses that form everywhere, including the lead wavenumber q(E + i Gamma), so
/// a lossy lattice probed at real E is exactly the lossless lattice probed at
/// the complex incident energy E + i Gamma.
struct ScatteringSystem {
    Eigen::MatrixXcd matrix;
    Eigen::VectorXcd rhs;
    LeadPhase lead;
    Complex effective_energy;  // E + i * overall_loss
};
ScatteringSystem assemble_scattering_system(const FiniteLattice& fl, const LeadParams& lead,
                                            Complex incident_energy);

struct ScatteringSolution {
    Complex r0;
    Complex t0;
    std::vector<std::array<Complex, 2>> amplitudes;  // a_j per unit cell
    double transmission = 0.0;                       // |t0|^2
    double reflection = 0.0;                         // |r0|^2
    LeadPhase lead;
    double residual = 0.0;  // ||A x - b|| / (||A||_F ||x|| + ||b||)
};

/// Direct dense LU solve of the bordered system.  One iterative-refinement
/// pass is applied if the relative residual exceeds 1e-10; if it still fails,
/// or the solve produced non-finite values, SingularSystem is thrown.
ScatteringSolution solve_scattering(const FiniteLattice& fl, const LeadParams& lead,
                                    Complex incident_energy);

enum class SolveStatus { Ok, Evanescent, Singular };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Ok: return "ok";
        case SolveStatus::Evanescent: return "evanescent";
        case SolveStatus::Singular: return "singular";
    }
    return "?";
}

struct SweepPoint {
    Complex incident_energy;
    double transmission = 0.0;
    double reflection = 0.0;
    SolveStatus status = SolveStatus::Ok;
};

/// One solve per grid point, deterministic output order; singular points are
/// recorded in-row (NaN probabilities) and the sweep continues.  Real energies
/// outside the lead band |E| <= V0 (1 - 1e-12) are flagged Evanescent.
std::vector<SweepPoint> transmission_sweep(const FiniteLattice& fl, const LeadParams& lead,
                                           const std::vector<Complex>& energy_grid,
                                           int workers = 1);

/// T over the complex incident-energy plane, row-major with E_r as the slow
/// index: cells[ir * ei.size() + ii].
struct ComplexMap {
    std::vector<double> er;
    std::vector<double> ei;
    std::vector<SweepPoint> cells;

    const SweepPoint& at(std::size_t ir, std::size_t ii) const {
        return cells[ir * ei.size() + ii];
    }
};
ComplexMap complex_energy_map(const FiniteLattice& fl, const LeadParams& lead,
                              const std::vector<double>& er_grid,
                              const std::vector<double>& ei_grid, int workers = 1);

/// Transmission at real incident energies through a lattice with overall loss
/// Gamma = fl.overall_loss (applied to lattice sites only, never to leads).
/// By the energy-shift identity above this equals the Gamma = 0 complex map
/// along the line E_i = Gamma; with Gamma = 0 it is transmission_sweep.
std::vector<SweepPoint> gamma_shift_sweep(const FiniteLattice& fl, const LeadParams& lead,
                                          const std::vector<double>& er_grid,
                                          int workers = 1);

struct Peak {
    std::size_t index = 0;
    double position = 0.0;
    double value = 0.0;
};

/// Grid peaks: strictly greater than both neighbours and value > threshold.
/// A flat run of equal values counts once, at its lowest-index point.
std::vector<Peak> find_peaks(std::span<const double> position, std::span<const double> value,
                             double threshold = 0.5);

}  // namespace cslat
