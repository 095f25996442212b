#include "xtransport/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace xtransport {

PathMode path_mode_from_string(const std::string& name) {
    if (name == "gaussian") return PathMode::gaussian;
    if (name == "random_walk") return PathMode::random_walk;
    throw std::invalid_argument("unknown path mode: " + name);
}

std::string to_string(PathMode mode) {
    return mode == PathMode::gaussian ? "gaussian" : "random_walk";
}

double GridPath::at_time(double t) const {
    if (t < time_lo() || t > time_hi()) {
        throw std::domain_error("GridPath::at_time: beyond horizon");
    }
    const double pos = t / delta + static_cast<double>(origin);
    const double fl = std::floor(pos);
    const std::size_t i = static_cast<std::size_t>(std::max(fl, 0.0));
    if (i + 1 >= values.size()) return values.back();
    const double w = pos - fl;
    return values[i] * (1.0 - w) + values[i + 1] * w;
}

PathLane::PathLane(std::uint64_t seed, std::uint64_t lane, double delta, PathMode mode)
    : rng_(Rng::stream(seed, lane)), step_(std::sqrt(delta)), mode_(mode) {}

double PathLane::next() {
    if (mode_ == PathMode::gaussian) {
        value_ += step_ * rng_.next_normal();
        return value_;
    }
    lattice_ += (rng_.next_u64() & 1ULL) ? 1 : -1;
    return static_cast<double>(lattice_) * step_;
}

GridPath simulate_path(std::uint64_t seed, double delta, double horizon, PathMode mode) {
    if (!(delta > 0.0) || !(horizon > 0.0)) {
        throw std::invalid_argument("simulate_path: delta and horizon must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(std::llround(horizon / delta));
    GridPath path;
    path.delta = delta;
    path.origin = n;
    path.mode = mode;
    path.values.assign(2 * n + 1, 0.0);

    PathLane fwd(seed, 0, delta, mode);
    for (std::size_t k = 1; k <= n; ++k) path.values[n + k] = fwd.next();
    PathLane bwd(seed, 1, delta, mode);
    for (std::size_t k = 1; k <= n; ++k) path.values[n - k] = bwd.next();
    return path;
}

ExcursionScanner::ExcursionScanner(double delta, double start_time)
    : delta_(delta), start_time_(start_time), boundary_(start_time) {}

std::optional<ExcursionScanner::Closed> ExcursionScanner::feed(double raw) {
    const double v = snap(raw);
    const std::size_t index = fed_++;
    const double fed_time = start_time_ + static_cast<double>(index) * delta_;

    std::optional<Closed> closed;
    if (v == 0.0) {
        if (sign_ != 0) {
            closed = Closed{boundary_, fed_time - boundary_, sign_, max_abs_,
                            first_index_, index};
        }
        boundary_ = fed_time;
        sign_ = 0;
        max_abs_ = 0.0;
    } else {
        const int s = v > 0.0 ? 1 : -1;
        if (sign_ == 0) {
            sign_ = s;
            max_abs_ = std::abs(v);
            first_index_ = index;
        } else if (s != sign_) {
            const double cross =
                fed_time - delta_ + delta_ * prev_value_ / (prev_value_ - v);
            closed = Closed{boundary_, cross - boundary_, sign_, max_abs_,
                            first_index_, index};
            boundary_ = cross;
            sign_ = s;
            max_abs_ = std::abs(v);
            first_index_ = index;
        } else {
            max_abs_ = std::max(max_abs_, std::abs(v));
        }
    }
    prev_value_ = v;
    return closed;
}

std::vector<Excursion> excursions(const GridPath& path, int* edge_discards) {
    std::vector<Excursion> out;
    int discards = 0;
    bool boundary_known = false;

    ExcursionScanner scanner(path.delta, path.time_lo());
    std::vector<ExcursionScanner::Closed> closed_list;
    for (std::size_t i = 0; i < path.values.size(); ++i) {
        auto closed = scanner.feed(path.values[i]);
        if (closed) {
            if (boundary_known) {
                closed_list.push_back(*closed);
            } else {
                ++discards;  // began before the window
            }
            boundary_known = true;
        }
        if (ExcursionScanner::snap(path.values[i]) == 0.0) boundary_known = true;
    }
    if (scanner.in_excursion()) ++discards;  // truncated by the right edge

    out.reserve(closed_list.size());
    for (const auto& c : closed_list) {
        Excursion e;
        e.start = c.start;
        e.lifetime = c.lifetime;
        e.sign = c.sign;
        e.max_abs = c.max_abs;
        e.samples.push_back(0.0);
        for (std::size_t i = c.first_index; i < c.last_index; ++i) {
            e.samples.push_back(ExcursionScanner::snap(path.values[i]));
        }
        e.samples.push_back(0.0);
        out.push_back(std::move(e));
    }
    if (edge_discards != nullptr) *edge_discards = discards;
    return out;
}

double local_time_epsilon(double delta) { return std::sqrt(delta); }

namespace {

double cell_density(const GridPath& path, std::size_t i) {
    if (path.mode == PathMode::random_walk) {
        const double v = ExcursionScanner::snap(path.values[i]);
        return v == 0.0 ? 1.0 / std::sqrt(path.delta) : 0.0;
    }
    const double eps = local_time_epsilon(path.delta);
    return std::abs(path.values[i]) <= eps ? 1.0 / (2.0 * eps) : 0.0;
}

}  // namespace

double local_time(const GridPath& path, double up_to) {
    double lo = 0.0, hi = up_to;
    if (up_to < 0.0) {
        lo = up_to;
        hi = 0.0;
    }
    if (lo < path.time_lo() || hi > path.time_hi()) {
        throw std::domain_error("local_time: beyond horizon");
    }
    double total = 0.0;
    const double d = path.delta;
    long long fi = static_cast<long long>(
        std::floor(lo / d + static_cast<double>(path.origin)));
    if (fi < 0) fi = 0;
    for (std::size_t i = static_cast<std::size_t>(fi); i < path.values.size(); ++i) {
        const double cell_lo = path.time_of(i);
        if (cell_lo >= hi) break;
        const double overlap = std::min(hi, cell_lo + d) - std::max(lo, cell_lo);
        if (overlap > 0.0) total += overlap * cell_density(path, i);
    }
    return total;
}

HybridMeasure local_time_measure(const GridPath& path) {
    std::vector<double> breaks{path.time_lo()};
    std::vector<double> dens;
    double current = cell_density(path, 0);
    for (std::size_t i = 1; i + 1 < path.values.size(); ++i) {
        const double d = cell_density(path, i);
        if (d != current) {
            breaks.push_back(path.time_of(i));
            dens.push_back(current);
            current = d;
        }
    }
    breaks.push_back(path.time_hi());
    dens.push_back(current);
    return HybridMeasure(std::move(breaks), std::move(dens), {});
}

GridPath shift_path(const GridPath& path, double t, double* snap_distance) {
    const long long k = std::llround(t / path.delta);
    const long long new_origin = static_cast<long long>(path.origin) + k;
    if (new_origin < 0 || new_origin >= static_cast<long long>(path.values.size())) {
        throw std::domain_error("shift_path: shift beyond horizon");
    }
    if (snap_distance != nullptr) {
        *snap_distance = std::abs(t - static_cast<double>(k) * path.delta);
    }
    GridPath out = path;
    out.origin = static_cast<std::size_t>(new_origin);
    return out;
}

GridPath time_reverse_negative(const GridPath& path) {
    GridPath out;
    out.delta = path.delta;
    out.origin = 0;
    out.mode = path.mode;
    out.values.reserve(path.origin + 1);
    for (std::size_t k = 0; k <= path.origin; ++k) {
        out.values.push_back(path.values[path.origin - k]);
    }
    return out;
}

GridPath concatenate(const GridPath& w1, const Excursion& e, const GridPath& w3) {
    if (w1.delta != w3.delta) {
        throw std::invalid_argument("concatenate: mismatched grid steps");
    }
    if (ExcursionScanner::snap(w1.values[w1.origin]) != 0.0 ||
        ExcursionScanner::snap(w3.values[w3.origin]) != 0.0) {
        throw std::invalid_argument("concatenate: nonzero junction values");
    }
    if (e.samples.size() < 2 || e.samples.front() != 0.0 || e.samples.back() != 0.0) {
        throw std::invalid_argument("concatenate: excursion samples must begin and end at 0");
    }
    GridPath out;
    out.delta = w1.delta;
    out.origin = w1.origin;
    out.mode = w1.mode;
    out.values.assign(w1.values.begin(), w1.values.begin() + static_cast<long>(w1.origin) + 1);
    for (std::size_t i = 1; i + 1 < e.samples.size(); ++i) out.values.push_back(e.samples[i]);
    for (std::size_t i = w3.origin; i < w3.values.size(); ++i) out.values.push_back(w3.values[i]);
    return out;
}

double first_matching_time(const std::vector<Excursion>& exc, const ExcursionTest& test) {
    for (const Excursion& e : exc) {
        if (e.start > 0.0 && test(e)) return e.start;
    }
    throw std::runtime_error("first_matching_time: no matching excursion within horizon");
}

double last_matching_before_zero(const std::vector<Excursion>& exc, const ExcursionTest& test) {
    double best = 0.0;
    bool found = false;
    for (const Excursion& e : exc) {
        if (e.start >= 0.0) break;
        if (test(e)) {
            best = e.start;
            found = true;
        }
    }
    if (!found) {
        throw std::runtime_error("last_matching_before_zero: no matching excursion within horizon");
    }
    return best;
}

double last_zero_before(const std::vector<Excursion>& exc, double t) {
    double g = t;
    for (const Excursion& e : exc) {
        if (e.start > t) break;
        if (t < e.start + e.lifetime) g = e.start;
    }
    return g;
}

double first_zero_after(const std::vector<Excursion>& exc, double t) {
    for (const Excursion& e : exc) {
        if (e.start > t) break;
        if (t < e.start + e.lifetime) return e.start + e.lifetime;
    }
    return t;
}

namespace {
constexpr char kPathMagic[8] = {'X', 'T', 'P', 'A', 'T', 'H', '0', '1'};
}

void write_path_binary(const GridPath& path, const std::string& filename) {
    std::ofstream out(filename, std::ios::binary);
    if (!out) throw std::runtime_error("write_path_binary: cannot open " + filename);
    out.write(kPathMagic, sizeof(kPathMagic));
    const std::int64_t origin = static_cast<std::int64_t>(path.origin);
    const std::int64_t length = static_cast<std::int64_t>(path.values.size());
    const std::int64_t mode = path.mode == PathMode::gaussian ? 0 : 1;
    out.write(reinterpret_cast<const char*>(&path.delta), sizeof(double));
    out.write(reinterpret_cast<const char*>(&origin), sizeof(origin));
    out.write(reinterpret_cast<const char*>(&length), sizeof(length));
    out.write(reinterpret_cast<const char*>(&mode), sizeof(mode));
    out.write(reinterpret_cast<const char*>(path.values.data()),
              static_cast<std::streamsize>(path.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_path_binary: write failed");
}

GridPath read_path_binary(const std::string& filename) {
    std::ifstream in(filename, std::ios::binary);
    if (!in) throw std::runtime_error("read_path_binary: cannot open " + filename);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kPathMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("read_path_binary: bad header");
    }
    GridPath path;
    std::int64_t origin = 0, length = 0, mode = 0;
    in.read(reinterpret_cast<char*>(&path.delta), sizeof(double));
    in.read(reinterpret_cast<char*>(&origin), sizeof(origin));
    in.read(reinterpret_cast<char*>(&length), sizeof(length));
    in.read(reinterpret_cast<char*>(&mode), sizeof(mode));
    if (!in || length <= 0 || origin < 0 || origin >= length) {
        throw std::runtime_error("read_path_binary: bad header fields");
    }
    path.origin = static_cast<std::size_t>(origin);
    path.mode = mode == 0 ? PathMode::gaussian : PathMode::random_walk;
    path.values.resize(static_cast<std::size_t>(length));
    in.read(reinterpret_cast<char*>(path.values.data()),
            static_cast<std::streamsize>(path.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_path_binary: truncated payload");
    return path;
}

void write_path_csv(const GridPath& path, const std::string& filename) {
    std::ofstream out(filename);
    if (!out) throw std::runtime_error("write_path_csv: cannot open " + filename);
    out << "time,value\n";
    char buf[64];
    for (std::size_t i = 0; i < path.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", path.time_of(i), path.values[i]);
        out << buf;
    }
}

}  // namespace xtransport
