#include "kylesim/path.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kylesim/rng.hpp"

namespace kylesim {

TimeGrid::TimeGrid(double horizon, std::size_t n_steps)
    : horizon_(horizon), n_steps_(n_steps), dt_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("time grid horizon must be positive and finite");
    if (n_steps == 0) throw std::invalid_argument("time grid needs at least one step");
    dt_ = horizon / static_cast<double>(n_steps);
}

double TimeGrid::time(std::size_t i) const {
    if (i > n_steps_) throw std::out_of_range("grid node index out of range");
    if (i == n_steps_) return horizon_;
    return static_cast<double>(i) * dt_;
}

namespace {
std::atomic<std::uint64_t> next_path_id{1};
std::uint64_t fresh_id() { return next_path_id.fetch_add(1, std::memory_order_relaxed); }
}  // namespace

SamplePath::SamplePath(TimeGrid grid, std::vector<double> values)
    : grid_(grid), raw_(std::move(values)), stop_(0), id_(fresh_id()) {
    if (raw_.size() != grid_.size())
        throw std::invalid_argument("path needs n_steps+1 values, got " +
                                    std::to_string(raw_.size()));
    stop_ = raw_.size() - 1;
}

SamplePath::SamplePath(TimeGrid grid, double fill)
    : grid_(grid), raw_(grid.size(), fill), stop_(grid.n_steps()), id_(fresh_id()) {}

SamplePath::SamplePath(const SamplePath& o)
    : grid_(o.grid_), raw_(o.raw_), stop_(o.stop_), offset_(o.offset_), id_(fresh_id()) {}

SamplePath::SamplePath(SamplePath&& o) noexcept
    : grid_(o.grid_), raw_(std::move(o.raw_)), stop_(o.stop_), offset_(o.offset_), id_(fresh_id()) {
    o.id_ = fresh_id();
}

SamplePath& SamplePath::operator=(const SamplePath& o) {
    grid_ = o.grid_;
    raw_ = o.raw_;
    stop_ = o.stop_;
    offset_ = o.offset_;
    id_ = fresh_id();
    return *this;
}

SamplePath& SamplePath::operator=(SamplePath&& o) noexcept {
    grid_ = o.grid_;
    raw_ = std::move(o.raw_);
    stop_ = o.stop_;
    offset_ = o.offset_;
    id_ = fresh_id();
    o.id_ = fresh_id();
    return *this;
}

double SamplePath::at(std::size_t j) const {
    if (j >= raw_.size()) throw std::out_of_range("path index out of range");
    return (*this)[j];
}

std::vector<double> SamplePath::values() const {
    std::vector<double> v(raw_.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (*this)[j];
    return v;
}

bool SamplePath::operator==(const SamplePath& o) const {
    if (!(grid_ == o.grid_)) return false;
    for (std::size_t j = 0; j < raw_.size(); ++j)
        if ((*this)[j] != o[j]) return false;
    return true;
}

SamplePath stopped(const SamplePath& path, std::size_t k) {
    if (k >= path.size()) throw std::out_of_range("stop index out of range");
    SamplePath out(path);
    if (k < out.stop_) {
        out.stop_ = k;
        out.offset_ = 0.0;
    }
    return out;
}

SamplePath vertical_bump(const SamplePath& path, std::size_t k, double h) {
    if (k >= path.size()) throw std::out_of_range("bump index out of range");
    SamplePath out = stopped(path, k);
    if (out.stop_ < k) {
        out.raw_ = out.values();
        out.stop_ = k;
        out.offset_ = 0.0;
    }
    out.offset_ += h;
    return out;
}

double quadratic_variation(const SamplePath& path, std::size_t k) {
    if (k == 0 || k >= path.size()) throw std::out_of_range("quadratic variation index out of range");
    double qv = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        const double d = path[i] - path[i - 1];
        qv += d * d;
    }
    return qv;
}

void PathBundle::add(SamplePath p, std::uint64_t stream_id) {
    if (!(p.grid() == grid)) throw std::invalid_argument("bundle paths must share one grid");
    paths.push_back(std::move(p));
    stream_ids.push_back(stream_id);
}

PathBundle brownian_bundle(const TimeGrid& grid, std::size_t n_paths, double sigma,
                           std::uint64_t seed) {
    PathBundle b(grid);
    const double sd = sigma * std::sqrt(grid.dt());
    b.paths.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        NormalStream rng(seed, i, Stream::noise);
        std::vector<double> v(grid.size());
        v[0] = 0.0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) v[k + 1] = v[k] + sd * rng.normal();
        b.add(SamplePath(grid, std::move(v)), i);
    }
    return b;
}

}  // namespace kylesim
