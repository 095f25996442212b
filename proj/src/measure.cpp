#include "xtransport/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace xtransport {

namespace {

void validate(const std::vector<double>& breakpoints,
              const std::vector<double>& densities,
              const std::vector<Atom>& atoms) {
    if (breakpoints.size() < 2) {
        throw std::invalid_argument("HybridMeasure: need at least two breakpoints");
    }
    if (densities.size() + 1 != breakpoints.size()) {
        throw std::invalid_argument("HybridMeasure: densities/breakpoints size mismatch");
    }
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i] < breakpoints[i + 1])) {
            throw std::invalid_argument("HybridMeasure: breakpoints not strictly increasing");
        }
    }
    for (double d : densities) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw std::invalid_argument("HybridMeasure: densities must be finite and >= 0");
        }
    }
    const double lo = breakpoints.front();
    const double hi = breakpoints.back();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const Atom& a = atoms[i];
        if (!(a.mass > 0.0) || !std::isfinite(a.mass)) {
            throw std::invalid_argument("HybridMeasure: atom masses must be positive");
        }
        if (a.location < lo || a.location > hi) {
            throw std::invalid_argument("HybridMeasure: atom outside window");
        }
        if (i > 0 && !(atoms[i - 1].location < a.location)) {
            throw std::invalid_argument("HybridMeasure: atom locations must be strictly increasing");
        }
    }
}

}  // namespace

HybridMeasure::HybridMeasure(std::vector<double> breakpoints,
                             std::vector<double> densities,
                             std::vector<Atom> atoms)
    : breakpoints_(std::move(breakpoints)),
      densities_(std::move(densities)),
      atoms_(std::move(atoms)) {
    validate(breakpoints_, densities_, atoms_);
    cumulative_.resize(breakpoints_.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        cumulative_[i] = cumulative_[i - 1] +
                         densities_[i - 1] * (breakpoints_[i] - breakpoints_[i - 1]);
    }
}

HybridMeasure HybridMeasure::zero(double lo, double hi) {
    return HybridMeasure({lo, hi}, {0.0}, {});
}

HybridMeasure HybridMeasure::uniform(double lo, double hi, double density) {
    return HybridMeasure({lo, hi}, {density}, {});
}

HybridMeasure HybridMeasure::atoms_only(double lo, double hi, std::vector<Atom> atoms) {
    return HybridMeasure({lo, hi}, {0.0}, std::move(atoms));
}

double HybridMeasure::diffuse_cdf(double t) const {
    if (t <= breakpoints_.front()) return 0.0;
    if (t >= breakpoints_.back()) return cumulative_.back();
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const std::size_t piece = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return cumulative_[piece] + densities_[piece] * (t - breakpoints_[piece]);
}

double HybridMeasure::diffuse_mass_between(double lo, double hi) const {
    if (!(lo < hi)) return 0.0;
    return diffuse_cdf(hi) - diffuse_cdf(lo);
}

double HybridMeasure::atom_mass_at(double t) const {
    const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), t,
                                     [](const Atom& a, double v) { return a.location < v; });
    if (it != atoms_.end() && it->location == t) return it->mass;
    return 0.0;
}

double HybridMeasure::atom_mass_between(double lo, double hi) const {
    double sum = 0.0;
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), lo,
                               [](double v, const Atom& a) { return v < a.location; });
    for (; it != atoms_.end() && it->location < hi; ++it) sum += it->mass;
    return sum;
}

double HybridMeasure::density_right_of(double t) const {
    if (t < breakpoints_.front() || t >= breakpoints_.back()) return 0.0;
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const std::size_t piece = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return densities_[piece];
}

double HybridMeasure::mass(const Interval& interval) const {
    if (interval.lo < window_lo() || interval.hi > window_hi() || interval.lo > interval.hi) {
        throw std::domain_error("HybridMeasure::mass: interval outside window");
    }
    double m = diffuse_mass_between(interval.lo, interval.hi) +
               atom_mass_between(interval.lo, interval.hi);
    if (interval.closed_lo) m += atom_mass_at(interval.lo);
    if (interval.closed_hi && interval.hi != interval.lo) m += atom_mass_at(interval.hi);
    return m;
}

double HybridMeasure::total_mass() const {
    double m = cumulative_.back();
    for (const Atom& a : atoms_) m += a.mass;
    return m;
}

std::pair<HybridMeasure, HybridMeasure> HybridMeasure::decompose() const {
    HybridMeasure diffuse(breakpoints_, densities_, {});
    HybridMeasure atomic({window_lo(), window_hi()}, {0.0}, atoms_);
    return {std::move(diffuse), std::move(atomic)};
}

HybridMeasure HybridMeasure::shifted(double t) const {
    std::vector<double> b(breakpoints_);
    for (double& x : b) x -= t;
    std::vector<Atom> a(atoms_);
    for (Atom& at : a) at.location -= t;
    return HybridMeasure(std::move(b), densities_, std::move(a));
}

HybridMeasure HybridMeasure::restricted(double lo, double hi) const {
    if (lo < window_lo() || hi > window_hi() || !(lo < hi)) {
        throw std::domain_error("HybridMeasure::restricted: bad subwindow");
    }
    std::vector<double> b;
    std::vector<double> d;
    b.push_back(lo);
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
        const double x0 = breakpoints_[i], x1 = breakpoints_[i + 1];
        if (x1 <= lo || x0 >= hi) continue;
        const double cut = std::min(x1, hi);
        if (cut > b.back()) {
            b.push_back(cut);
            d.push_back(densities_[i]);
        }
    }
    if (b.back() < hi) {
        b.push_back(hi);
        d.push_back(0.0);
    }
    std::vector<Atom> a;
    for (const Atom& at : atoms_) {
        if (at.location >= lo && at.location <= hi) a.push_back(at);
    }
    return HybridMeasure(std::move(b), std::move(d), std::move(a));
}

std::string HybridMeasure::to_json_string() const {
    nlohmann::json j;
    j["window"] = {window_lo(), window_hi()};
    j["breakpoints"] = breakpoints_;
    j["densities"] = densities_;
    auto arr = nlohmann::json::array();
    for (const Atom& a : atoms_) arr.push_back({a.location, a.mass});
    j["atoms"] = std::move(arr);
    return j.dump();
}

HybridMeasure HybridMeasure::from_json_string(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    std::vector<double> b = j.at("breakpoints").get<std::vector<double>>();
    std::vector<double> d = j.at("densities").get<std::vector<double>>();
    std::vector<Atom> atoms;
    for (const auto& pair : j.at("atoms")) {
        atoms.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
    }
    return HybridMeasure(std::move(b), std::move(d), std::move(atoms));
}

double singular_overlap_mass(const HybridMeasure& mu, const HybridMeasure& nu) {
    double overlap = 0.0;
    // Shared atom locations.
    for (const Atom& a : mu.atoms()) {
        const double other = nu.atom_mass_at(a.location);
        if (other > 0.0) overlap += std::min(a.mass, other);
    }
    // Regions where both densities are positive.
    const auto& bm = mu.breakpoints();
    const auto& bn = nu.breakpoints();
    std::size_t i = 0, k = 0;
    double t = std::max(mu.window_lo(), nu.window_lo());
    const double end = std::min(mu.window_hi(), nu.window_hi());
    while (t < end) {
        while (i + 1 < bm.size() && bm[i + 1] <= t) ++i;
        while (k + 1 < bn.size() && bn[k + 1] <= t) ++k;
        const double next = std::min(i + 1 < bm.size() ? bm[i + 1] : end,
                                     k + 1 < bn.size() ? bn[k + 1] : end);
        const double stop = std::min(next, end);
        if (stop > t) {
            const double dm = mu.density_right_of(t);
            const double dn = nu.density_right_of(t);
            if (dm > 0.0 && dn > 0.0) overlap += std::min(dm, dn) * (stop - t);
        }
        if (stop <= t) break;
        t = stop;
    }
    return overlap;
}

bool mutually_singular(const HybridMeasure& mu, const HybridMeasure& nu, double tol) {
    return singular_overlap_mass(mu, nu) <= tol;
}

}  // namespace xtransport
