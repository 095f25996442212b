#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "xtransport/measure.hpp"
#include "xtransport/rng.hpp"

namespace xtransport::testing {

// Random mutually singular hybrid pair on a window [-w, w]: the window is
// partitioned into cells, each cell's density goes to xi, to eta, or to
// neither, and a few atoms are sprinkled at fresh locations.
struct SingularPair {
    HybridMeasure xi;
    HybridMeasure eta;
};

inline SingularPair make_singular_pair(Rng& rng, bool with_atoms = true) {
    const double w = 2.0 + 3.0 * rng.next_unit();
    const int cells = 6 + static_cast<int>(rng.next_below(8));
    std::vector<double> breaks{-w};
    for (int i = 1; i < cells; ++i) {
        breaks.push_back(-w + 2.0 * w * (static_cast<double>(i) + 0.6 * (rng.next_unit() - 0.5)) /
                                   static_cast<double>(cells));
    }
    breaks.push_back(w);
    std::sort(breaks.begin(), breaks.end());

    std::vector<double> dxi(cells, 0.0);
    std::vector<double> deta(cells, 0.0);
    for (int i = 0; i < cells; ++i) {
        const double pick = rng.next_unit();
        const double d = 0.2 + 1.8 * rng.next_unit();
        if (pick < 0.4) {
            dxi[static_cast<std::size_t>(i)] = d;
        } else if (pick < 0.8) {
            deta[static_cast<std::size_t>(i)] = d;
        }
    }

    std::vector<Atom> axi, aeta;
    if (with_atoms) {
        const int n_atoms = 1 + static_cast<int>(rng.next_below(5));
        std::vector<double> locs;
        for (int i = 0; i < n_atoms; ++i) {
            double loc;
            bool fresh;
            do {
                loc = -w + 2.0 * w * rng.next_unit();
                fresh = true;
                for (double l : locs) {
                    if (std::abs(l - loc) < 1e-6) fresh = false;
                }
            } while (!fresh);
            locs.push_back(loc);
            const Atom a{loc, 0.2 + 1.5 * rng.next_unit()};
            if (rng.next_unit() < 0.5) {
                axi.push_back(a);
            } else {
                aeta.push_back(a);
            }
        }
        auto by_loc = [](const Atom& a, const Atom& b) { return a.location < b.location; };
        std::sort(axi.begin(), axi.end(), by_loc);
        std::sort(aeta.begin(), aeta.end(), by_loc);
    }

    return {HybridMeasure(breaks, dxi, axi), HybridMeasure(breaks, deta, aeta)};
}

// Periodized mutually singular pair with equal mass per period, tiled over
// [0, periods*period_len]. Used by the balance suite.
inline SingularPair make_periodized_pair(Rng& rng, int periods, double* period_len_out) {
    const double period = 1.5 + 1.5 * rng.next_unit();
    const int cells = 4 + static_cast<int>(rng.next_below(4));

    std::vector<double> cell_edges{0.0};
    for (int i = 1; i < cells; ++i) {
        cell_edges.push_back(period * (static_cast<double>(i) + 0.5 * (rng.next_unit() - 0.5)) /
                             static_cast<double>(cells));
    }
    cell_edges.push_back(period);
    std::sort(cell_edges.begin(), cell_edges.end());

    std::vector<double> dxi(cells, 0.0), deta(cells, 0.0);
    for (int i = 0; i < cells; ++i) {
        const double pick = rng.next_unit();
        const double d = 0.3 + 1.5 * rng.next_unit();
        if (pick < 0.45) {
            dxi[static_cast<std::size_t>(i)] = d;
        } else if (pick < 0.9) {
            deta[static_cast<std::size_t>(i)] = d;
        }
    }
    // One atom for each side at a fresh interior location, so both hybrid
    // shapes are exercised.
    const double xi_atom_loc = period * (0.1 + 0.3 * rng.next_unit());
    const double eta_atom_loc = period * (0.5 + 0.3 * rng.next_unit());
    const double xi_atom_mass = 0.2 + rng.next_unit();
    const double eta_atom_mass = 0.2 + rng.next_unit();

    double mass_xi = xi_atom_mass, mass_eta = eta_atom_mass;
    for (int i = 0; i < cells; ++i) {
        const double len = cell_edges[static_cast<std::size_t>(i) + 1] -
                           cell_edges[static_cast<std::size_t>(i)];
        mass_xi += dxi[static_cast<std::size_t>(i)] * len;
        mass_eta += deta[static_cast<std::size_t>(i)] * len;
    }
    const double scale = mass_xi / mass_eta;  // equalize per-period mass

    std::vector<double> breaks{0.0};
    std::vector<double> vxi, veta;
    std::vector<Atom> axi, aeta;
    for (int p = 0; p < periods; ++p) {
        const double off = period * static_cast<double>(p);
        for (int i = 0; i < cells; ++i) {
            breaks.push_back(off + cell_edges[static_cast<std::size_t>(i) + 1]);
            vxi.push_back(dxi[static_cast<std::size_t>(i)]);
            veta.push_back(deta[static_cast<std::size_t>(i)] * scale);
        }
        axi.push_back({off + xi_atom_loc, xi_atom_mass});
        aeta.push_back({off + eta_atom_loc, eta_atom_mass * scale});
    }
    *period_len_out = period;
    return {HybridMeasure(breaks, vxi, axi), HybridMeasure(breaks, veta, aeta)};
}

}  // namespace xtransport::testing
