#include "doctest.h"

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "xtransport/measure.hpp"
#include "xtransport/rng.hpp"
#include "xtransport/transport.hpp"

using namespace xtransport;

namespace {

double mass_ho(const HybridMeasure& mu, double lo, double hi) {
    return mu.diffuse_mass_between(lo, hi) + mu.atom_mass_between(lo, hi) +
           mu.atom_mass_at(lo);
}

// Brute-force pushforward: split the diffuse source into small cells, send
// each cell's mass through tau^0 at its midpoint, and push source atoms
// through the kernel on a u-grid. Entirely independent of the sweep.
std::vector<double> brute_pushforward_bins(const HybridMeasure& source,
                                           const HybridMeasure& xi,
                                           const HybridMeasure& eta, double limit,
                                           double bin, double substep, int u_grid) {
    const double lo = source.window_lo();
    const int bins = static_cast<int>(std::ceil((limit - lo) / bin));
    std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
    auto deposit = [&](double t, double m) {
        const int idx = static_cast<int>(std::floor((t - lo) / bin));
        if (idx >= 0 && idx < bins) out[static_cast<std::size_t>(idx)] += m;
    };
    for (double s = lo; s < limit; s += substep) {
        const double cell_hi = std::min(s + substep, limit);
        const double m = source.diffuse_mass_between(s, cell_hi);
        if (m == 0.0) continue;
        const TransportResult r = tau_u(xi, eta, 0.5 * (s + cell_hi), 0.0, limit);
        if (r.finite()) deposit(r.value, m);
    }
    for (const Atom& a : source.atoms()) {
        if (a.location >= limit) continue;
        for (int i = 0; i < u_grid; ++i) {
            const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(u_grid);
            const TransportResult r = tau_u(xi, eta, a.location, u, limit);
            if (r.finite()) deposit(r.value, a.mass / static_cast<double>(u_grid));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("pushforward: uniform source onto a single atom") {
    const HybridMeasure xi = HybridMeasure::uniform(0.0, 1.0, 1.0);
    const HybridMeasure eta = HybridMeasure::atoms_only(0.0, 1.0, {{1.0, 1.0}});
    const HybridMeasure pf = pushforward(xi, xi, eta, 1.0);
    CHECK(pf.atom_mass_at(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pf.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    const BalanceReport rep = verify_balance(xi, eta, 0.05, 1.0);
    CHECK(rep.max_interval_error <= 1e-12);
    CHECK(rep.unallocated_mass <= 1e-12);
}

TEST_CASE("pushforward of the counterexample doubles the Lebesgue density") {
    for (double u : {0.0, 0.7, 1.4}) {
        // several periods so the window holds the whole transport
        std::vector<double> breaks{u};
        std::vector<double> dxi, deta;
        for (int k = 0; k < 9; ++k) {
            const double cell_lo = u + static_cast<double>(k);
            breaks.push_back(cell_lo + 1.0);
            const bool in_a = (k % 3) < 2;
            dxi.push_back(in_a ? 2.0 : 1.0);
            deta.push_back(in_a ? 1.0 : 3.0);
        }
        const HybridMeasure xi(breaks, dxi, {});
        const HybridMeasure eta(breaks, deta, {});
        const HybridMeasure source = HybridMeasure::uniform(u, u + 2.0, 1.0);

        const HybridMeasure pf = pushforward(source, xi, eta, u + 9.0);
        // expected: twice Lebesgue on [u+2, u+3)
        for (int i = 0; i < 40; ++i) {
            const double a = u + 2.0 + static_cast<double>(i) * 0.025;
            const double b = a + 0.025;
            CHECK(std::abs(mass_ho(pf, a, b) - 2.0 * (b - a)) <= 1e-6);
        }
        CHECK(std::abs(pf.total_mass() - 2.0) <= 1e-9);
        CHECK(mass_ho(pf, u, u + 2.0) <= 1e-12);

        // full-pair balance check must flag the failure
        const BalanceReport rep = verify_balance(xi, eta, 1e-3, u + 9.0, 2.0);
        CHECK(rep.max_interval_error > 1e-4);
    }
}

TEST_CASE("verify_balance: randomized periodized pairs balance exactly") {
    Rng rng(60);
    for (int trial = 0; trial < 10; ++trial) {
        double period = 0.0;
        const auto pair = testing::make_periodized_pair(rng, 8, &period);
        const double hi = pair.xi.window_hi();
        const BalanceReport rep = verify_balance(pair.xi, pair.eta, 1e-3, hi, 2.0 * period);
        CHECK(rep.max_interval_error <= 1e-9);
        CHECK(rep.unallocated_mass <= 1e-9);
    }
}

TEST_CASE("pushforward agrees with the brute-force oracle") {
    Rng rng(61);
    for (int trial = 0; trial < 3; ++trial) {
        double period = 0.0;
        const auto pair = testing::make_periodized_pair(rng, 5, &period);
        const double hi = pair.xi.window_hi();
        const double src_hi = hi - 2.0 * period;
        const HybridMeasure source = pair.xi.restricted(pair.xi.window_lo(), src_hi);

        const double bin = 0.05;
        const double substep = 1e-4;
        const int u_grid = 4000;
        const HybridMeasure pf = pushforward(source, pair.xi, pair.eta, hi);
        const std::vector<double> brute =
            brute_pushforward_bins(source, pair.xi, pair.eta, hi, bin, substep, u_grid);
        const double lo = source.window_lo();
        double max_err = 0.0;
        for (std::size_t i = 0; i < brute.size(); ++i) {
            const double a = lo + bin * static_cast<double>(i);
            const double b = std::min(a + bin, hi);
            max_err = std::max(max_err, std::abs(mass_ho(pf, a, b) - brute[i]));
        }
        // The oracle misplaces at most one substep of density and two u-cells
        // of atom mass per bin boundary.
        const double budget = 4.0 * substep * 3.0 + 4.0 * 1.5 / static_cast<double>(u_grid);
        CHECK(max_err <= budget);
    }
}

TEST_CASE("balance report serializes to json") {
    const HybridMeasure xi = HybridMeasure::uniform(0.0, 1.0, 1.0);
    const HybridMeasure eta = HybridMeasure::atoms_only(0.0, 1.0, {{1.0, 1.0}});
    const BalanceReport rep = verify_balance(xi, eta, 0.25, 1.0);
    const std::string j = rep.to_json_string();
    CHECK(j.find("max_interval_error") != std::string::npos);
    CHECK(j.find("unallocated_mass") != std::string::npos);
    CHECK(j.find("grid_step") != std::string::npos);
}
