#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xtransport/measure.hpp"

namespace xtransport {

// Target of an allocation query: a finite time, or no balance point within
// the search limit. A finite value is always >= the query point.
struct TransportResult {
    double value = 0.0;
    bool infinite = false;

    static TransportResult at(double t) { return {t, false}; }
    static TransportResult none() { return {0.0, true}; }
    bool finite() const { return !infinite; }
};

// tau(s) = inf{t > s : xi[s,t] <= eta[s,t]} with closed brackets on both
// sides. Returns none() when no balance point exists at or before
// search_limit.
TransportResult tau(const HybridMeasure& xi, const HybridMeasure& eta,
                    double s, double search_limit);

// tau^u(s) = inf{t > s : u*xi{s} + xi(s,t) <= eta[s,t]}; the source interval
// is open, so the atom of xi at a candidate point t does not count against
// balance there.
TransportResult tau_u(const HybridMeasure& xi, const HybridMeasure& eta,
                      double s, double u, double search_limit);

// One maximal u-subinterval on which u -> tau^u(s) is affine (or constant,
// or infinite). target_lo/target_hi are the values at the endpoints;
// interpolate linearly in between.
struct KernelPiece {
    double u_lo = 0.0;
    double u_hi = 0.0;
    TransportResult target_lo;
    TransportResult target_hi;

    bool constant() const {
        return target_lo.infinite == target_hi.infinite &&
               (target_lo.infinite || target_lo.value == target_hi.value);
    }
};

// The kernel K(s,.) as the pushforward of du under u -> tau^u(s).
struct KernelSample {
    double source = 0.0;
    std::vector<KernelPiece> pieces;

    double total_u_length() const;
    TransportResult target(double u) const;
};

KernelSample kernel(const HybridMeasure& xi, const HybridMeasure& eta,
                    double s, double search_limit);

// Time change stretching the axis at each atom of xi or eta by its mass:
//   zeta(s) = s + xi_d[0,s) + eta_d[0,s)   (s >= 0)
//   zeta(s) = s - xi_d[s,0) - eta_d[s,0)   (s <  0)
// with generalized inverse zeta^{-1}(t) = inf{s : zeta(s) >= t}.
class TimeChange {
public:
    TimeChange(const HybridMeasure& xi, const HybridMeasure& eta);

    double forward(double s) const;
    double inverse(double t) const;

    // Combined atom mass xi{s} + eta{s}.
    double jump_at(double s) const;

    double window_lo() const { return window_lo_; }
    double window_hi() const { return window_hi_; }
    double image_lo() const { return image_lo_; }
    double image_hi() const { return image_hi_; }

private:
    struct Node {
        double location;   // atom location
        double zeta_pre;   // zeta at the location (pre-jump)
        double mass;       // jump size
    };
    std::vector<Node> nodes_;
    double window_lo_ = 0.0, window_hi_ = 0.0;
    double image_lo_ = 0.0, image_hi_ = 0.0;
};

TimeChange build_time_change(const HybridMeasure& xi, const HybridMeasure& eta);

// Stretched measures (xi*, eta*): diffuse parts transported by zeta, each
// atom spread uniformly (density 1) over its jump gap. Requires the inputs
// to be mutually singular; outputs are diffuse and mutually singular.
std::pair<HybridMeasure, HybridMeasure> stretch(const HybridMeasure& xi,
                                                const HybridMeasure& eta);

// tau on a stretched (diffuse) pair. Throws if either input has atoms.
TransportResult tau_star(const HybridMeasure& xi_star, const HybridMeasure& eta_star,
                         double s, double search_limit);

// Exact pushforward of `source` under the transport kernel generated by
// (xi, eta): diffuse source mass follows tau^0, source atoms at xi-atom
// locations follow the u-randomized kernel. Mass with no balance point at
// or before search_limit is dropped from the result (see verify_balance).
HybridMeasure pushforward(const HybridMeasure& source, const HybridMeasure& xi,
                          const HybridMeasure& eta, double search_limit);

struct BalanceReport {
    double max_interval_error = 0.0;
    double unallocated_mass = 0.0;
    double grid_step = 0.0;
    std::string to_json_string() const;
};

// Pushes xi forward through its own kernel and compares against eta on a
// uniform grid over [window_lo + trim, window_hi - trim]. The source is
// truncated to [window_lo, window_hi - trim] so right-edge runoff does not
// register as unallocated mass.
BalanceReport verify_balance(const HybridMeasure& xi, const HybridMeasure& eta,
                             double grid_step, double search_limit, double trim = 0.0);

}  // namespace xtransport
