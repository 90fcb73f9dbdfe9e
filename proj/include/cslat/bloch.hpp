#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cslat/types.hpp"

namespace cslat {

/// Default tolerance on the PT discriminant D(k) = (t + 2d cos k)^2 - gamma^2/4
/// below which a momentum is labelled an exceptional point.
inline constexpr double kEpTolerance = 1e-9;

/// Bloch Hamiltonian of the cross-stitch chain at momentum k:
///   [[eps_a - 2d cos k, -t - 2d cos k],
///    [-t - 2d cos k,    eps_b - 2d cos k]]
/// with eps_a = delta/2 + i*gamma/2, eps_b = -delta/2 - i*gamma/2.
Eigen::Matrix2cd bloch_hamiltonian(double k, const LatticeParams& p);

/// Closed-form band energies at momentum k,
///   eps_pm = -2d cos k +- sqrt((t + 2d cos k)^2 + ((delta + i gamma)/2)^2),
/// using the principal complex square root (raw branches, no continuity
/// re-pairing; see sample_bands for continuous tracks).
std::pair<Complex, Complex> band_energies(double k, const LatticeParams& p);

/// PT discriminant D(k) = (t + 2d cos k)^2 - gamma^2/4.  Real energies iff
/// D > 0, complex-conjugate pair iff D < 0, coalescence at D = 0.
double pt_discriminant(double k, const LatticeParams& p);

/// Phase of momentum k for the PT-symmetric chain (delta must be 0):
/// Unbroken if D > tol, Broken if D < -tol, ExceptionalPoint otherwise.
/// Throws std::invalid_argument for delta != 0, where the classification is
/// undefined (no exceptional points exist in the bands).
Phase classify_phase(double k, const LatticeParams& p, double tol = kEpTolerance);

/// Gap-facing band edges of the unbroken phase.  `upper` is the lower edge of
/// the upper band, attained at k = pi; `lower` is the upper edge of the lower
/// band, attained at k = 0:
///   upper =  2d - sqrt((t - 2d)^2 - (gamma/2)^2)
///   lower = -2d + sqrt((t + 2d)^2 - (gamma/2)^2)
/// An edge is absent (nullopt) when its radicand is negative, i.e. the band
/// has evaporated.  `gamma` overrides p.gamma; t and d come from p.
struct BandEdges {
    std::optional<double> upper;
    std::optional<double> lower;
};
BandEdges band_edges(double gamma, const LatticeParams& p);

/// Exceptional-point energies e1 = t - gamma/2 and e2 = t + gamma/2, each
/// flagged present when its momentum pair +-k* still exists in the zone:
/// e1 requires |(gamma/2 - t) / 2d| <= 1, e2 requires |(gamma/2 + t) / 2d| <= 1.
struct EpLines {
    double e1 = 0.0;
    double e2 = 0.0;
    bool e1_present = false;
    bool e2_present = false;
};
EpLines ep_lines(double gamma, const LatticeParams& p);

/// Critical gain/loss gamma_c = 2|t - 2d| (EP pair annihilation at the zone
/// boundary) and critical energy eps_c = 2d.
struct CriticalConstants {
    double gamma_c = 0.0;
    double eps_c = 0.0;
};
CriticalConstants critical_constants(const LatticeParams& p);

struct BandPoint {
    double k = 0.0;
    Complex eps_plus;
    Complex eps_minus;
    Phase label = Phase::Unbroken;
};

struct BandStructure {
    std::vector<BandPoint> points;
};

/// Samples both bands on a uniform nk-point grid over [-pi, pi).  Adjacent
/// samples are re-paired by minimal-distance matching in the complex plane so
/// each output track is continuous through exceptional points; the track with
/// the larger mean real part is reported as eps_plus.  For delta = 0 the label
/// comes from classify_phase; for delta != 0 (no EPs in the bands) a sample is
/// labelled Unbroken when both energies are real within tol, Broken otherwise.
BandStructure sample_bands(const LatticeParams& p, int nk, double tol = kEpTolerance,
                           int workers = 1);

enum class Region { NoBand, UnbrokenOnly, BrokenOnly, Coexistent };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::NoBand: return "noband";
        case Region::UnbrokenOnly: return "unbroken_only";
        case Region::BrokenOnly: return "broken_only";
        case Region::Coexistent: return "coexistent";
    }
    return "?";
}

/// Occupancy map over (gamma, e_r) cells, row-major with gamma as the slow
/// index.  A cell is unbroken-occupied when e_r falls inside the real-energy
/// coverage of the unbroken samples at that gamma (coverage intervals from
/// adjacent k-samples, inflated by half the local energy-grid spacing), and
/// broken-occupied likewise against Re(eps) of the broken samples.
struct PhaseDiagram {
    std::vector<double> gamma;
    std::vector<double> energy;
    std::vector<Region> cells;  // size gamma.size() * energy.size()

    Region at(std::size_t ig, std::size_t ie) const {
        return cells[ig * energy.size() + ie];
    }
};

/// Requires delta = 0 and nonempty grids; nk is the internal momentum
/// resolution of the per-gamma band scan.
PhaseDiagram phase_diagram(const LatticeParams& p, const std::vector<double>& gamma_grid,
                           const std::vector<double>& energy_grid, int nk = 4096,
                           int workers = 1);

}  // namespace cslat
