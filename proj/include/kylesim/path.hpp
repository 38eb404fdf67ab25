#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace kylesim {

class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_steps);

    double horizon() const { return horizon_; }
    std::size_t n_steps() const { return n_steps_; }
    double dt() const { return dt_; }
    double time(std::size_t i) const;
    std::size_t size() const { return n_steps_ + 1; }

    bool operator==(const TimeGrid& o) const {
        return horizon_ == o.horizon_ && n_steps_ == o.n_steps_;
    }

private:
    double horizon_;
    std::size_t n_steps_;
    double dt_;
};

// Dense node values plus an (index, tail offset) view: reads at j >= stop
// return raw[stop] + offset, so stop/bump chains never touch raw storage.
class SamplePath {
public:
    SamplePath(TimeGrid grid, std::vector<double> values);
    explicit SamplePath(TimeGrid grid, double fill = 0.0);
    SamplePath(const SamplePath& o);
    SamplePath(SamplePath&& o) noexcept;
    SamplePath& operator=(const SamplePath& o);
    SamplePath& operator=(SamplePath&& o) noexcept;

    // Fresh for every constructed or assigned object; keys prefix caches.
    std::uint64_t id() const { return id_; }

    const TimeGrid& grid() const { return grid_; }
    double operator[](std::size_t j) const {
        return j < stop_ ? raw_[j] : raw_[stop_] + offset_;
    }
    double at(std::size_t j) const;
    std::vector<double> values() const;
    std::size_t size() const { return raw_.size(); }
    double time(std::size_t i) const { return grid_.time(i); }
    std::size_t stop_index() const { return stop_; }

    bool operator==(const SamplePath& o) const;

    friend SamplePath stopped(const SamplePath& path, std::size_t k);
    friend SamplePath vertical_bump(const SamplePath& path, std::size_t k, double h);

private:
    TimeGrid grid_;
    std::vector<double> raw_;
    std::size_t stop_;
    double offset_ = 0.0;
    std::uint64_t id_;
};

SamplePath stopped(const SamplePath& path, std::size_t k);
SamplePath vertical_bump(const SamplePath& path, std::size_t k, double h);
double quadratic_variation(const SamplePath& path, std::size_t k);

struct PathBundle {
    TimeGrid grid;
    std::vector<SamplePath> paths;
    std::vector<std::uint64_t> stream_ids;

    explicit PathBundle(TimeGrid g) : grid(g) {}
    void add(SamplePath p, std::uint64_t stream_id);
    std::size_t size() const { return paths.size(); }
};

// Brownian paths Y = sigma * B from counter-based streams (stream id = path index).
PathBundle brownian_bundle(const TimeGrid& grid, std::size_t n_paths, double sigma,
                           std::uint64_t seed);

}  // namespace kylesim
