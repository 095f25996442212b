#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xtransport/measure.hpp"
#include "xtransport/rng.hpp"

namespace xtransport {

enum class PathMode { gaussian, random_walk };

PathMode path_mode_from_string(const std::string& name);
std::string to_string(PathMode mode);

// Two-sided path sampled on a uniform grid, linear interpolation between
// grid points. values[origin] is the value at time 0.
struct GridPath {
    double delta = 0.0;
    std::size_t origin = 0;
    std::vector<double> values;
    PathMode mode = PathMode::gaussian;

    double time_lo() const { return -static_cast<double>(origin) * delta; }
    double time_hi() const {
        return static_cast<double>(values.size() - 1 - origin) * delta;
    }
    double time_of(std::size_t index) const {
        return (static_cast<double>(index) - static_cast<double>(origin)) * delta;
    }
    // Linear interpolation; throws outside the horizon.
    double at_time(double t) const;
};

// Two-sided simulation from independent forward/backward increment streams.
// gaussian: N(0, delta) increments; random_walk: fair +-sqrt(delta) steps
// (kept on an integer lattice so zeros are exact).
GridPath simulate_path(std::uint64_t seed, double delta, double horizon, PathMode mode);

// Excursion away from zero: starts at `start`, lifetime from interpolated
// (or exact, in random_walk mode) zero crossings, grid samples on [0, D]
// with zero endpoints.
struct Excursion {
    double start = 0.0;
    double lifetime = 0.0;
    int sign = 0;
    double max_abs = 0.0;
    std::vector<double> samples;
};

// Incremental crossing detector fed one grid value at a time. Exact zeros
// (after snapping) close excursions at the grid point; sign changes close
// them at the interpolated crossing time.
class ExcursionScanner {
public:
    ExcursionScanner(double delta, double start_time);

    struct Closed {
        double start = 0.0;
        double lifetime = 0.0;
        int sign = 0;
        double max_abs = 0.0;
        std::size_t first_index = 0;  // feed index of first interior sample
        std::size_t last_index = 0;   // feed index one past the last interior sample
    };

    // Feed the value at the next grid time; returns a completed excursion
    // when this value closes one.
    std::optional<Closed> feed(double value);

    double last_boundary() const { return boundary_; }
    bool in_excursion() const { return sign_ != 0; }
    int current_sign() const { return sign_; }
    double current_start() const { return boundary_; }
    double current_max_abs() const { return max_abs_; }
    std::size_t fed_count() const { return fed_; }
    static double snap(double v) { return (v > -1e-12 && v < 1e-12) ? 0.0 : v; }

private:
    double delta_;
    double start_time_;   // time of the first fed sample
    double boundary_;     // time of the last known zero
    double prev_value_ = 0.0;
    int sign_ = 0;
    double max_abs_ = 0.0;
    std::size_t fed_ = 0;
    std::size_t first_index_ = 0;
};

// All complete excursions of the path in time order; truncated edge
// excursions are dropped and counted in *edge_discards when given.
std::vector<Excursion> excursions(const GridPath& path, int* edge_discards = nullptr);

// Occupation-estimator half width for the local time at zero.
double local_time_epsilon(double delta);

// ell[0,t] for t >= 0 (or ell[t,0] for t < 0).
double local_time(const GridPath& path, double up_to);

// The cumulative local time as a piecewise-constant density over the whole
// window. gaussian: occupation estimator cells; random_walk: one cell of
// density 1/sqrt(delta) per zero visit.
HybridMeasure local_time_measure(const GridPath& path);

// Relabel the origin to the grid point nearest t; *snap_distance reports
// |t - snapped|. Throws std::domain_error beyond the horizon.
GridPath shift_path(const GridPath& path, double t, double* snap_distance = nullptr);

// The (-inf, 0] part of the path, time reversed onto [0, horizon].
GridPath time_reverse_negative(const GridPath& path);

// w1 on t <= 0, the excursion on (0, D), w3 started at D. Junction values
// must be zero.
GridPath concatenate(const GridPath& w1, const Excursion& e, const GridPath& w3);

using ExcursionTest = std::function<bool(const Excursion&)>;

// S_A: left end of the first matching excursion starting after 0.
double first_matching_time(const std::vector<Excursion>& exc, const ExcursionTest& test);
// S'_A: left end of the last matching excursion starting before 0.
double last_matching_before_zero(const std::vector<Excursion>& exc, const ExcursionTest& test);

// G_t and D_t from the excursion decomposition: inside an excursion they are
// its endpoints, elsewhere the zero set is dense at grid scale and both
// collapse to t.
double last_zero_before(const std::vector<Excursion>& exc, double t);
double first_zero_after(const std::vector<Excursion>& exc, double t);

// Columnar binary path format: magic, delta, origin, length, then values.
void write_path_binary(const GridPath& path, const std::string& filename);
GridPath read_path_binary(const std::string& filename);
void write_path_csv(const GridPath& path, const std::string& filename);

// One-sided increment stream for chunked simulation; value(0) = 0.
class PathLane {
public:
    PathLane(std::uint64_t seed, std::uint64_t lane, double delta, PathMode mode);
    double next();  // value at the next grid time

private:
    Rng rng_;
    double step_;
    double value_ = 0.0;
    long long lattice_ = 0;
    PathMode mode_;
};

}  // namespace xtransport
