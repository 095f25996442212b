#include "xtransport/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace xtransport {

namespace {

// Merged sorted unique event coordinates (breakpoints and atoms of both
// measures) in (lo, hi), plus hi itself as the final event.
std::vector<double> merged_events(const HybridMeasure& xi, const HybridMeasure& eta,
                                  double lo, double hi) {
    std::vector<double> ev;
    auto push_range = [&](const std::vector<double>& xs) {
        for (double x : xs) {
            if (x > lo && x < hi) ev.push_back(x);
        }
    };
    push_range(xi.breakpoints());
    push_range(eta.breakpoints());
    for (const Atom& a : xi.atoms()) {
        if (a.location > lo && a.location < hi) ev.push_back(a.location);
    }
    for (const Atom& a : eta.atoms()) {
        if (a.location > lo && a.location < hi) ev.push_back(a.location);
    }
    ev.push_back(hi);
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
    return ev;
}

void check_query(const HybridMeasure& xi, const HybridMeasure& eta,
                 double s, double search_limit) {
    const double lo = std::max(xi.window_lo(), eta.window_lo());
    const double hi = std::min(xi.window_hi(), eta.window_hi());
    if (s < lo || s > hi) {
        throw std::domain_error("allocation query point outside window");
    }
    if (!(s < search_limit) || search_limit > hi) {
        throw std::domain_error("allocation search limit outside (s, window_hi]");
    }
}

// Shared scan for tau and tau^u. The balance deficit
//   G(t) = eta[s,t] - source_base - xi(s,t) - (closed_candidate ? xi{t} : 0)
// is linear between events, jumps up when an eta atom arrives and down once
// a xi atom is passed; the result is inf{t > s : G(t) >= 0}.
TransportResult allocate_scan(const HybridMeasure& xi, const HybridMeasure& eta,
                              double s, double source_base, bool closed_candidate,
                              double search_limit) {
    check_query(xi, eta, s, search_limit);

    // Value of G just to the right of s: diffuse parts vanish in the limit
    // and non-atom points are dense, so the candidate-atom term drops out.
    double g = eta.atom_mass_at(s) - source_base;
    if (g > 0.0) return TransportResult::at(s);
    if (g == 0.0 && eta.density_right_of(s) - xi.density_right_of(s) >= 0.0) {
        return TransportResult::at(s);
    }

    double prev = s;
    for (double t : merged_events(xi, eta, s, search_limit)) {
        const double slope = eta.density_right_of(prev) - xi.density_right_of(prev);
        if (g < 0.0 && slope > 0.0) {
            const double cross = prev + (-g) / slope;
            if (cross < t) return TransportResult::at(cross);
        }
        g += slope * (t - prev);
        const double eta_atom = eta.atom_mass_at(t);
        const double xi_atom = xi.atom_mass_at(t);
        const double g_at = g + eta_atom - (closed_candidate ? xi_atom : 0.0);
        if (g_at >= 0.0) return TransportResult::at(t);
        g += eta_atom - xi_atom;
        prev = t;
    }
    return TransportResult::none();
}

}  // namespace

TransportResult tau(const HybridMeasure& xi, const HybridMeasure& eta,
                    double s, double search_limit) {
    return allocate_scan(xi, eta, s, xi.atom_mass_at(s), true, search_limit);
}

TransportResult tau_u(const HybridMeasure& xi, const HybridMeasure& eta,
                      double s, double u, double search_limit) {
    if (u < 0.0 || u > 1.0) throw std::domain_error("tau_u: u must lie in [0,1]");
    return allocate_scan(xi, eta, s, u * xi.atom_mass_at(s), false, search_limit);
}

double KernelSample::total_u_length() const {
    double len = 0.0;
    for (const KernelPiece& p : pieces) len += p.u_hi - p.u_lo;
    return len;
}

TransportResult KernelSample::target(double u) const {
    for (const KernelPiece& p : pieces) {
        if (u >= p.u_lo && u <= p.u_hi) {
            if (p.constant() || p.target_lo.infinite) return p.target_lo;
            const double w = (p.u_hi > p.u_lo) ? (u - p.u_lo) / (p.u_hi - p.u_lo) : 0.0;
            return TransportResult::at(p.target_lo.value +
                                       w * (p.target_hi.value - p.target_lo.value));
        }
    }
    return TransportResult::none();
}

KernelSample kernel(const HybridMeasure& xi, const HybridMeasure& eta,
                    double s, double search_limit) {
    check_query(xi, eta, s, search_limit);
    KernelSample sample;
    sample.source = s;

    const double theta_max = xi.atom_mass_at(s);
    if (theta_max == 0.0) {
        const TransportResult t0 = tau_u(xi, eta, s, 0.0, search_limit);
        sample.pieces.push_back({0.0, 1.0, t0, t0});
        return sample;
    }

    // In threshold space theta = u*xi{s}, tau^u(s) is the first time the
    // running function H(t) = eta[s,t] - xi(s,t) reaches theta. The pieces
    // of the kernel are read off the record process of H.
    auto emit = [&](double from_theta, double to_theta, TransportResult lo,
                    TransportResult hi) {
        if (to_theta > from_theta) {
            sample.pieces.push_back({from_theta / theta_max, to_theta / theta_max, lo, hi});
        }
    };

    double h = eta.atom_mass_at(s);
    double record = 0.0;
    if (h > 0.0) {
        emit(0.0, std::min(h, theta_max), TransportResult::at(s), TransportResult::at(s));
        record = h;
    }

    double prev = s;
    for (double t : merged_events(xi, eta, s, search_limit)) {
        if (record >= theta_max) break;
        const double slope = eta.density_right_of(prev) - xi.density_right_of(prev);
        const double h_end = h + slope * (t - prev);
        if (slope > 0.0 && h_end > record) {
            const double to_theta = std::min(h_end, theta_max);
            const double t_lo = prev + (record - h) / slope;
            const double t_hi = prev + (to_theta - h) / slope;
            emit(record, to_theta, TransportResult::at(t_lo), TransportResult::at(t_hi));
            record = h_end;
        }
        h = h_end;
        const double eta_atom = eta.atom_mass_at(t);
        if (eta_atom > 0.0) {
            h += eta_atom;
            if (h > record) {
                emit(record, std::min(h, theta_max), TransportResult::at(t),
                     TransportResult::at(t));
                record = h;
            }
        }
        h -= xi.atom_mass_at(t);
        prev = t;
    }
    if (record < theta_max) {
        emit(record, theta_max, TransportResult::none(), TransportResult::none());
    }
    return sample;
}

TimeChange::TimeChange(const HybridMeasure& xi, const HybridMeasure& eta) {
    if (xi.window_lo() != eta.window_lo() || xi.window_hi() != eta.window_hi()) {
        throw std::invalid_argument("TimeChange: measures must share a window");
    }
    window_lo_ = xi.window_lo();
    window_hi_ = xi.window_hi();
    if (window_lo_ > 0.0 || window_hi_ < 0.0) {
        throw std::invalid_argument("TimeChange: window must contain 0");
    }

    // Merge atoms of both measures (summing masses at equal locations).
    std::vector<Atom> merged;
    const auto& ax = xi.atoms();
    const auto& ae = eta.atoms();
    std::size_t i = 0, k = 0;
    while (i < ax.size() || k < ae.size()) {
        if (k == ae.size() || (i < ax.size() && ax[i].location < ae[k].location)) {
            merged.push_back(ax[i++]);
        } else if (i == ax.size() || ae[k].location < ax[i].location) {
            merged.push_back(ae[k++]);
        } else {
            merged.push_back({ax[i].location, ax[i].mass + ae[k].mass});
            ++i;
            ++k;
        }
    }

    double neg_mass = 0.0;
    for (const Atom& a : merged) {
        if (a.location < 0.0) neg_mass += a.mass;
    }
    // zeta at the atom location itself: for loc >= 0 the own mass is not yet
    // counted ([0,s) is open at s); for loc < 0 it is ([s,0) is closed at s).
    double below_nonneg = 0.0;
    double at_or_above_neg = neg_mass;
    nodes_.reserve(merged.size());
    for (const Atom& a : merged) {
        double zeta_pre;
        if (a.location >= 0.0) {
            zeta_pre = a.location + below_nonneg;
            below_nonneg += a.mass;
        } else {
            zeta_pre = a.location - at_or_above_neg;
            at_or_above_neg -= a.mass;
        }
        nodes_.push_back({a.location, zeta_pre, a.mass});
    }
    image_lo_ = forward(window_lo_);
    image_hi_ = forward(window_hi_) + jump_at(window_hi_);
}

double TimeChange::forward(double s) const {
    double shift = 0.0;
    if (s >= 0.0) {
        for (const Node& n : nodes_) {
            if (n.location >= 0.0 && n.location < s) shift += n.mass;
        }
        return s + shift;
    }
    for (const Node& n : nodes_) {
        if (n.location >= s && n.location < 0.0) shift += n.mass;
    }
    return s - shift;
}

double TimeChange::inverse(double t) const {
    const Node* last = nullptr;
    for (const Node& n : nodes_) {
        if (n.zeta_pre <= t) {
            last = &n;
        } else {
            break;
        }
    }
    if (last == nullptr) {
        double neg_mass = 0.0;
        for (const Node& n : nodes_) {
            if (n.location < 0.0) neg_mass += n.mass;
        }
        return t + neg_mass;
    }
    const double post = last->zeta_pre + last->mass;
    if (t <= post) return last->location;  // flat stretch over the jump gap
    return last->location + (t - post);
}

double TimeChange::jump_at(double s) const {
    for (const Node& n : nodes_) {
        if (n.location == s) return n.mass;
        if (n.location > s) break;
    }
    return 0.0;
}

TimeChange build_time_change(const HybridMeasure& xi, const HybridMeasure& eta) {
    return TimeChange(xi, eta);
}

namespace {

// Stretch one measure of a mutually singular pair along the shared time
// change: density pieces ride zeta rigidly, own atoms become unit-density
// blocks over their gaps, partner atoms leave zero-density gaps.
HybridMeasure stretch_one(const HybridMeasure& mu, const HybridMeasure& partner,
                          const TimeChange& tc) {
    std::vector<double> breaks{tc.image_lo()};
    std::vector<double> dens;
    auto append = [&](double hi, double d) {
        if (hi > breaks.back()) {
            breaks.push_back(hi);
            dens.push_back(d);
        }
    };

    std::vector<Atom> events;
    for (const Atom& a : mu.atoms()) events.push_back(a);
    for (const Atom& a : partner.atoms()) events.push_back(a);
    std::sort(events.begin(), events.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });

    const auto& bp = mu.breakpoints();
    const auto& dv = mu.densities();
    std::size_t piece = 0;
    double cursor = mu.window_lo();

    auto copy_density_until = [&](double stop) {
        while (cursor < stop) {
            while (piece + 1 < bp.size() && bp[piece + 1] <= cursor) ++piece;
            const double piece_end = std::min(bp[piece + 1], stop);
            append(breaks.back() + (piece_end - cursor), dv[piece]);
            cursor = piece_end;
        }
    };

    for (const Atom& ev : events) {
        copy_density_until(ev.location);
        const bool own = mu.atom_mass_at(ev.location) > 0.0;
        append(breaks.back() + tc.jump_at(ev.location), own ? 1.0 : 0.0);
        cursor = ev.location;
    }
    copy_density_until(mu.window_hi());
    append(tc.image_hi(), 0.0);

    return HybridMeasure(std::move(breaks), std::move(dens), {});
}

}  // namespace

std::pair<HybridMeasure, HybridMeasure> stretch(const HybridMeasure& xi,
                                                const HybridMeasure& eta) {
    if (!mutually_singular(xi, eta, 0.0)) {
        throw std::invalid_argument("stretch: inputs must be mutually singular");
    }
    TimeChange tc(xi, eta);
    return {stretch_one(xi, eta, tc), stretch_one(eta, xi, tc)};
}

TransportResult tau_star(const HybridMeasure& xi_star, const HybridMeasure& eta_star,
                         double s, double search_limit) {
    if (!xi_star.is_diffuse() || !eta_star.is_diffuse()) {
        throw std::invalid_argument("tau_star: inputs must be diffuse");
    }
    return allocate_scan(xi_star, eta_star, s, 0.0, false, search_limit);
}

// ---------------------------------------------------------------------------
// Exact pushforward.
//
// Write W(t) = eta[a,t] - xi[a,t). The allocation has the water-level
// description tau^0(s) = inf{t > s : W(t) >= W(s)}, and for an atom of xi at
// t the thresholds u*xi{t} + W(t) - xi{t}, u in [0,1], sweep exactly the
// down-jump of W after t. Descents of W open claims on level ranges; each
// rise (or eta-atom up-jump) settles the most recently opened levels first,
// so a stack suffices and every matched piece is an affine source-to-target
// map, making the pushforward exact.
// ---------------------------------------------------------------------------

namespace {

struct Claim {
    double cur_lo = 0.0;  // lowest still-open level
    double cur_hi = 0.0;  // highest still-open level
    bool is_atom = false;
    double source_density = 0.0;  // diffuse claims
    double ds_dlevel = 0.0;
    double atom_mass = 0.0;  // atom claims
    double source_atom_mass = 0.0;
};

struct Emission {
    std::vector<std::pair<double, double>> block_lo_hi;
    std::vector<double> block_density;
    std::vector<Atom> atoms;

    void add_block(double lo, double hi, double density) {
        if (hi > lo && density > 0.0) {
            block_lo_hi.push_back({lo, hi});
            block_density.push_back(density);
        }
    }
    void add_atom(double loc, double mass) {
        if (mass > 0.0) atoms.push_back({loc, mass});
    }
};

double claim_mass(const Claim& c) {
    const double span = c.cur_hi - c.cur_lo;
    if (span <= 0.0) return 0.0;
    if (c.is_atom) return c.source_atom_mass * span / c.atom_mass;
    return c.source_density * c.ds_dlevel * span;
}

HybridMeasure assemble(const Emission& em, double lo, double hi) {
    std::vector<std::pair<double, double>> deltas;
    for (std::size_t i = 0; i < em.block_lo_hi.size(); ++i) {
        const double b_lo = std::max(em.block_lo_hi[i].first, lo);
        const double b_hi = std::min(em.block_lo_hi[i].second, hi);
        if (b_hi <= b_lo) continue;
        deltas.push_back({b_lo, em.block_density[i]});
        deltas.push_back({b_hi, -em.block_density[i]});
    }
    std::sort(deltas.begin(), deltas.end());

    std::vector<double> breaks{lo};
    std::vector<double> dens;
    double running = 0.0;
    std::size_t i = 0;
    while (i < deltas.size()) {
        const double x = deltas[i].first;
        if (x > breaks.back()) {
            breaks.push_back(x);
            dens.push_back(std::max(running, 0.0));
        }
        while (i < deltas.size() && deltas[i].first == x) {
            running += deltas[i].second;
            ++i;
        }
    }
    if (breaks.back() < hi) {
        breaks.push_back(hi);
        dens.push_back(std::max(running, 0.0));
    }

    std::vector<Atom> atoms(em.atoms);
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms) {
        if (!merged.empty() && merged.back().location == a.location) {
            merged.back().mass += a.mass;
        } else {
            merged.push_back(a);
        }
    }
    return HybridMeasure(std::move(breaks), std::move(dens), std::move(merged));
}

HybridMeasure pushforward_impl(const HybridMeasure& source, const HybridMeasure& xi,
                               const HybridMeasure& eta, double search_limit,
                               double* unallocated_out) {
    const double lo = std::min({source.window_lo(), xi.window_lo(), eta.window_lo()});
    const double hi = search_limit;
    if (!(hi > lo)) throw std::domain_error("pushforward: empty sweep range");

    Emission em;
    double unallocated = 0.0;

    // Source atoms at non-xi-atom locations transport as point queries.
    for (const Atom& a : source.atoms()) {
        if (a.location >= hi) {
            unallocated += a.mass;
            continue;
        }
        if (xi.atom_mass_at(a.location) > 0.0) continue;  // handled by the sweep
        const TransportResult r = tau_u(xi, eta, a.location, 0.0, hi);
        if (r.finite()) {
            em.add_atom(r.value, a.mass);
        } else {
            unallocated += a.mass;
        }
    }

    std::vector<double> ev = merged_events(xi, eta, lo, hi);
    for (double x : source.breakpoints()) {
        if (x > lo && x < hi) ev.push_back(x);
    }
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());

    std::vector<Claim> stack;

    auto consume = [&](double w_from, double w_to, double t_from, double dt_dlevel,
                       bool to_point, double point_loc) {
        double level = w_from;
        while (level < w_to && !stack.empty()) {
            Claim& top = stack.back();
            const double take_hi = std::min(top.cur_hi, w_to);
            const double dl = take_hi - level;
            if (dl > 0.0) {
                const double mass = top.is_atom
                                        ? top.source_atom_mass * dl / top.atom_mass
                                        : top.source_density * top.ds_dlevel * dl;
                if (to_point) {
                    em.add_atom(point_loc, mass);
                } else if (mass > 0.0) {
                    const double t_lo = t_from + (level - w_from) * dt_dlevel;
                    const double t_hi = t_from + (take_hi - w_from) * dt_dlevel;
                    em.add_block(t_lo, t_hi, mass / (t_hi - t_lo));
                }
            }
            if (take_hi >= top.cur_hi) {
                stack.pop_back();
            } else {
                top.cur_lo = take_hi;
            }
            level = take_hi;
        }
    };

    auto handle_atoms_at = [&](double t, double& w) {
        const double eta_atom = eta.atom_mass_at(t);
        const double xi_atom = xi.atom_mass_at(t);
        if (eta_atom > 0.0 && xi_atom > 0.0) {
            throw std::domain_error("pushforward: coincident atoms of xi and eta");
        }
        if (eta_atom > 0.0) {
            consume(w, w + eta_atom, 0.0, 0.0, true, t);
            w += eta_atom;
        }
        if (xi_atom > 0.0) {
            Claim c;
            c.cur_hi = w;
            c.cur_lo = w - xi_atom;
            c.is_atom = true;
            c.atom_mass = xi_atom;
            c.source_atom_mass = source.atom_mass_at(t);
            stack.push_back(c);
            w = c.cur_lo;
        }
    };

    double w = 0.0;
    handle_atoms_at(lo, w);

    double prev = lo;
    for (double t : ev) {
        const double slope = eta.density_right_of(prev) - xi.density_right_of(prev);
        const double src_d = source.density_right_of(prev);
        const double len = t - prev;
        if (slope < 0.0) {
            Claim c;
            c.cur_hi = w;
            c.cur_lo = w + slope * len;
            c.source_density = src_d;
            c.ds_dlevel = 1.0 / (-slope);
            stack.push_back(c);
            w = c.cur_lo;
        } else {
            if (src_d > 0.0) em.add_block(prev, t, src_d);  // tau^0(s) = s here
            if (slope > 0.0) {
                consume(w, w + slope * len, prev, 1.0 / slope, false, 0.0);
                w += slope * len;
            }
        }
        handle_atoms_at(t, w);
        prev = t;
    }

    for (const Claim& c : stack) unallocated += claim_mass(c);
    if (unallocated_out != nullptr) *unallocated_out = unallocated;
    return assemble(em, lo, hi);
}

double mass_half_open(const HybridMeasure& mu, double lo, double hi) {
    // [lo, hi), lenient across windows; used only for grid comparisons.
    return mu.diffuse_mass_between(lo, hi) + mu.atom_mass_between(lo, hi) +
           mu.atom_mass_at(lo);
}

}  // namespace

HybridMeasure pushforward(const HybridMeasure& source, const HybridMeasure& xi,
                          const HybridMeasure& eta, double search_limit) {
    return pushforward_impl(source, xi, eta, search_limit, nullptr);
}

std::string BalanceReport::to_json_string() const {
    nlohmann::json j;
    j["max_interval_error"] = max_interval_error;
    j["unallocated_mass"] = unallocated_mass;
    j["grid_step"] = grid_step;
    return j.dump();
}

BalanceReport verify_balance(const HybridMeasure& xi, const HybridMeasure& eta,
                             double grid_step, double search_limit, double trim) {
    if (!(grid_step > 0.0)) throw std::invalid_argument("verify_balance: grid_step > 0");
    const double lo = xi.window_lo();
    const double hi = std::min(search_limit, xi.window_hi());
    const double src_hi = hi - trim;
    const HybridMeasure source = trim > 0.0 ? xi.restricted(lo, src_hi) : xi;

    BalanceReport report;
    report.grid_step = grid_step;
    const HybridMeasure pf =
        pushforward_impl(source, xi, eta, hi, &report.unallocated_mass);

    double max_err = 0.0;
    const double compare_lo = lo + trim;
    const long cells = static_cast<long>(std::floor((src_hi - compare_lo) / grid_step));
    for (long j = 0; j < cells; ++j) {
        const double g0 = compare_lo + static_cast<double>(j) * grid_step;
        const double g1 = std::min(compare_lo + static_cast<double>(j + 1) * grid_step, src_hi);
        const double err = std::abs(mass_half_open(pf, g0, g1) - mass_half_open(eta, g0, g1));
        max_err = std::max(max_err, err);
    }
    report.max_interval_error = max_err;
    return report;
}

}  // namespace xtransport
