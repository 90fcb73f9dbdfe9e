#include "cslat/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cslat/parallel.hpp"

namespace cslat {

namespace {

void require_finite_k(double k) {
    if (!std::isfinite(k)) throw std::invalid_argument("momentum k must be finite");
}

void require_pt_symmetric(const LatticeParams& p, const char* op) {
    if (p.delta != 0.0) {
        throw std::invalid_argument(std::string(op) +
                                    ": phase classification requires delta = 0");
    }
}

}  // namespace

Eigen::Matrix2cd bloch_hamiltonian(double k, const LatticeParams& p) {
    require_finite_k(k);
    p.validate();
    const double hx = -p.t - 2.0 * p.d * std::cos(k);
    const double h0 = -2.0 * p.d * std::cos(k);
    Eigen::Matrix2cd h;
    h << p.eps_a() + h0, Complex(hx, 0.0),  //
        Complex(hx, 0.0), p.eps_b() + h0;
    return h;
}

std::pair<Complex, Complex> band_energies(double k, const LatticeParams& p) {
    require_finite_k(k);
    p.validate();
    const double h0 = -2.0 * p.d * std::cos(k);
    const double hx = p.t + 2.0 * p.d * std::cos(k);
    const Complex hz(p.delta / 2.0, p.gamma / 2.0);
    const Complex root = std::sqrt(Complex(hx * hx, 0.0) + hz * hz);
    return {h0 + root, h0 - root};
}

double pt_discriminant(double k, const LatticeParams& p) {
    const double hx = p.t + 2.0 * p.d * std::cos(k);
    return hx * hx - p.gamma * p.gamma / 4.0;
}

Phase classify_phase(double k, const LatticeParams& p, double tol) {
    require_finite_k(k);
    p.validate();
    require_pt_symmetric(p, "classify_phase");
    if (!(tol > 0.0)) throw std::invalid_argument("classify_phase: tol must be > 0");
    const double disc = pt_discriminant(k, p);
    if (disc > tol) return Phase::Unbroken;
    if (disc < -tol) return Phase::Broken;
    return Phase::ExceptionalPoint;
}

BandEdges band_edges(double gamma, const LatticeParams& p) {
    p.validate();
    if (!std::isfinite(gamma)) throw std::invalid_argument("band_edges: gamma not finite");
    BandEdges edges;
    const double ru = (p.t - 2.0 * p.d) * (p.t - 2.0 * p.d) - gamma * gamma / 4.0;
    const double rl = (p.t + 2.0 * p.d) * (p.t + 2.0 * p.d) - gamma * gamma / 4.0;
    if (ru >= 0.0) edges.upper = 2.0 * p.d - std::sqrt(ru);
    if (rl >= 0.0) edges.lower = -2.0 * p.d + std::sqrt(rl);
    return edges;
}

EpLines ep_lines(double gamma, const LatticeParams& p) {
    p.validate();
    if (!std::isfinite(gamma) || gamma < 0.0) {
        throw std::invalid_argument("ep_lines: gamma must be finite and >= 0");
    }
    EpLines lines;
    lines.e1 = p.t - gamma / 2.0;
    lines.e2 = p.t + gamma / 2.0;
    // D(k) = 0 at t + 2d cos k = +-gamma/2; the +(-) sign carries energy e1 (e2).
    lines.e1_present = std::abs((gamma / 2.0 - p.t) / (2.0 * p.d)) <= 1.0;
    lines.e2_present = std::abs((gamma / 2.0 + p.t) / (2.0 * p.d)) <= 1.0;
    return lines;
}

CriticalConstants critical_constants(const LatticeParams& p) {
    p.validate();
    return {2.0 * std::abs(p.t - 2.0 * p.d), 2.0 * p.d};
}

BandStructure sample_bands(const LatticeParams& p, int nk, double tol, int workers) {
    p.validate();
    if (nk < 2) throw std::invalid_argument("sample_bands: nk must be >= 2");
    if (!(tol > 0.0)) throw std::invalid_argument("sample_bands: tol must be > 0");

    constexpr double pi = std::numbers::pi;
    BandStructure bs;
    bs.points.resize(static_cast<std::size_t>(nk));

    parallel_for(static_cast<std::size_t>(nk), workers, [&](std::size_t i) {
        const double k = -pi + 2.0 * pi * static_cast<double>(i) / nk;
        auto& pt = bs.points[i];
        pt.k = k;
        auto [ep, em] = band_energies(k, p);
        pt.eps_plus = ep;
        pt.eps_minus = em;
        if (p.delta == 0.0) {
            pt.label = classify_phase(k, p, tol);
        } else {
            // No EPs exist for delta != 0; label by reality of the energies.
            const double im = std::max(std::abs(ep.imag()), std::abs(em.imag()));
            pt.label = im <= tol ? Phase::Unbroken : Phase::Broken;
        }
    });

    // Re-pair adjacent samples so each track is continuous through EPs, where
    // the raw +- branches of the principal square root swap.  Matching is
    // against a first-order extrapolation of each track: at an accidental band
    // crossing the values alone cannot tell the two continuations apart (both
    // are continuous there), but the slopes can.
    for (std::size_t i = 1; i < bs.points.size(); ++i) {
        const auto& prev = bs.points[i - 1];
        auto& cur = bs.points[i];
        Complex pred_plus = prev.eps_plus;
        Complex pred_minus = prev.eps_minus;
        if (i >= 2) {
            pred_plus = 2.0 * prev.eps_plus - bs.points[i - 2].eps_plus;
            pred_minus = 2.0 * prev.eps_minus - bs.points[i - 2].eps_minus;
        }
        const double keep =
            std::abs(pred_plus - cur.eps_plus) + std::abs(pred_minus - cur.eps_minus);
        const double swap =
            std::abs(pred_plus - cur.eps_minus) + std::abs(pred_minus - cur.eps_plus);
        if (swap < keep) std::swap(cur.eps_plus, cur.eps_minus);
    }

    // Deterministic track orientation: eps_plus is the track with the larger
    // mean real part (mean imaginary part breaks ties).
    Complex mean_plus = 0.0, mean_minus = 0.0;
    for (const auto& pt : bs.points) {
        mean_plus += pt.eps_plus;
        mean_minus += pt.eps_minus;
    }
    const bool reorder = mean_plus.real() < mean_minus.real() ||
                         (mean_plus.real() == mean_minus.real() &&
                          mean_plus.imag() < mean_minus.imag());
    if (reorder) {
        for (auto& pt : bs.points) std::swap(pt.eps_plus, pt.eps_minus);
    }
    return bs;
}

namespace {

struct Interval {
    double lo, hi;
};

// Coverage intervals swept by consecutive same-phase samples along one track.
// EP samples act as boundary members of both phases.
void collect_coverage(const BandStructure& bs, bool broken, std::vector<Interval>& out) {
    auto in_phase = [broken](Phase ph) {
        if (ph == Phase::ExceptionalPoint) return true;
        return broken ? ph == Phase::Broken : ph == Phase::Unbroken;
    };
    auto add_segment = [&](Complex e0, Complex e1) {
        const double a = e0.real(), b = e1.real();
        out.push_back({std::min(a, b), std::max(a, b)});
    };
    for (std::size_t i = 1; i < bs.points.size(); ++i) {
        const auto& p0 = bs.points[i - 1];
        const auto& p1 = bs.points[i];
        if (!in_phase(p0.label) || !in_phase(p1.label)) continue;
        if (p0.label == Phase::ExceptionalPoint && p1.label == Phase::ExceptionalPoint)
            continue;  // isolated EP bracket carries no phase interior
        add_segment(p0.eps_plus, p1.eps_plus);
        add_segment(p0.eps_minus, p1.eps_minus);
    }
}

bool covered(const std::vector<Interval>& iv, double x, double pad) {
    return std::any_of(iv.begin(), iv.end(), [x, pad](const Interval& s) {
        return s.lo - pad <= x && x <= s.hi + pad;
    });
}

}  // namespace

PhaseDiagram phase_diagram(const LatticeParams& p, const std::vector<double>& gamma_grid,
                           const std::vector<double>& energy_grid, int nk, int workers) {
    p.validate();
    require_pt_symmetric(p, "phase_diagram");
    if (gamma_grid.empty() || energy_grid.empty()) {
        throw std::invalid_argument("phase_diagram: grids must be nonempty");
    }

    PhaseDiagram pd;
    pd.gamma = gamma_grid;
    pd.energy = energy_grid;
    pd.cells.resize(gamma_grid.size() * energy_grid.size(), Region::NoBand);

    parallel_for(gamma_grid.size(), workers, [&](std::size_t ig) {
        LatticeParams pg = p;
        pg.gamma = gamma_grid[ig];
        const BandStructure bs = sample_bands(pg, nk);

        std::vector<Interval> unbroken, broken;
        collect_coverage(bs, /*broken=*/false, unbroken);
        collect_coverage(bs, /*broken=*/true, broken);

        // Match within half the local energy-grid spacing so classification is
        // grid-resolution limited rather than producing false gaps.
        for (std::size_t ie = 0; ie < energy_grid.size(); ++ie) {
            double spacing = 0.0;
            if (energy_grid.size() > 1) {
                const std::size_t lo = ie == 0 ? 0 : ie - 1;
                const std::size_t hi = ie + 1 == energy_grid.size() ? ie : ie + 1;
                spacing = (energy_grid[hi] - energy_grid[lo]) / double(hi - lo);
            }
            const double pad = std::abs(spacing) / 2.0;
            const double er = energy_grid[ie];
            const bool u = covered(unbroken, er, pad);
            const bool b = covered(broken, er, pad);
            Region r = Region::NoBand;
            if (u && b) r = Region::Coexistent;
            else if (u) r = Region::UnbrokenOnly;
            else if (b) r = Region::BrokenOnly;
            pd.cells[ig * energy_grid.size() + ie] = r;
        }
    });
    return pd;
}

}  // namespace cslat
