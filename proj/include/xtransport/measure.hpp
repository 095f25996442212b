#pragma once

#include <string>
#include <utility>
#include <vector>

namespace xtransport {

// Real interval with independent endpoint inclusion flags.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool closed_lo = true;
    bool closed_hi = true;

    static Interval closed(double lo, double hi) { return {lo, hi, true, true}; }
    static Interval open(double lo, double hi) { return {lo, hi, false, false}; }
    static Interval left_open(double lo, double hi) { return {lo, hi, false, true}; }
    static Interval right_open(double lo, double hi) { return {lo, hi, true, false}; }
};

struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

// Locally finite nonnegative measure on a bounded window [a,b]:
// a piecewise-constant diffuse density plus a sorted list of atoms.
// Immutable after construction.
class HybridMeasure {
public:
    // breakpoints: a = x0 < x1 < ... < xk = b; densities: d1..dk >= 0 on the
    // open pieces; atoms strictly increasing in location with positive mass.
    HybridMeasure(std::vector<double> breakpoints,
                  std::vector<double> densities,
                  std::vector<Atom> atoms);

    static HybridMeasure zero(double lo, double hi);
    static HybridMeasure uniform(double lo, double hi, double density);
    static HybridMeasure atoms_only(double lo, double hi, std::vector<Atom> atoms);

    double window_lo() const { return breakpoints_.front(); }
    double window_hi() const { return breakpoints_.back(); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& densities() const { return densities_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    // Diffuse integral plus atom masses, honoring endpoint inclusion exactly.
    // Throws std::domain_error if the interval leaves the window.
    double mass(const Interval& interval) const;
    double total_mass() const;

    // Mass of the atom exactly at t (0 if none). Locations compare bit-exact.
    double atom_mass_at(double t) const;

    // Density on the piece immediately to the right of t; 0 outside the window.
    double density_right_of(double t) const;

    // Cumulative diffuse integral over [window_lo, t], clamped to the window.
    double diffuse_cdf(double t) const;

    // Diffuse mass of (lo,hi) intersected with the window (endpoints carry no
    // diffuse mass, so inclusion flags are irrelevant here).
    double diffuse_mass_between(double lo, double hi) const;

    // Atom mass strictly inside (lo,hi).
    double atom_mass_between(double lo, double hi) const;

    std::pair<HybridMeasure, HybridMeasure> decompose() const;

    // (shift(mu,t)).mass(C) == mu.mass(C+t); window moves to [a-t, b-t].
    HybridMeasure shifted(double t) const;

    // Restriction to [lo,hi] (atoms on the boundary kept).
    HybridMeasure restricted(double lo, double hi) const;

    bool is_diffuse() const { return atoms_.empty(); }

    // JSON object {window:[a,b], breakpoints:[...], densities:[...],
    // atoms:[[t,m],...]}; doubles round-trip bit-exact.
    std::string to_json_string() const;
    static HybridMeasure from_json_string(const std::string& text);

private:
    friend class TimeChange;

    std::vector<double> breakpoints_;
    std::vector<double> densities_;
    std::vector<double> cumulative_;  // cumulative_[i] = diffuse mass of [x0, xi]
    std::vector<Atom> atoms_;
};

// Structural overlap mass between the two representations: shared atom
// locations contribute min of the masses, regions where both densities are
// positive contribute min-density times length. Diffuse-vs-atom never counts.
double singular_overlap_mass(const HybridMeasure& mu, const HybridMeasure& nu);

// True iff the representations put joint mass at most tol on common support.
bool mutually_singular(const HybridMeasure& mu, const HybridMeasure& nu, double tol = 0.0);

}  // namespace xtransport
