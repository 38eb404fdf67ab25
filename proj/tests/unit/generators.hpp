#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kylesim/path.hpp"

namespace kylesim::prop {

// Seeded value source for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(eng_); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
    }
    std::uint64_t word() { return eng_(); }

    // scaled random walk on `grid` with per-step sd sigma sqrt(dt)
    SamplePath walk(const TimeGrid& grid, double sigma = 1.0, double y0 = 0.0) {
        std::vector<double> v(grid.size());
        v[0] = y0;
        const double sd = sigma * std::sqrt(grid.dt());
        for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + normal(sd);
        return SamplePath(grid, std::move(v));
    }

private:
    std::mt19937_64 eng_;
};

// Runs `prop` on `cases` generated inputs; the property asserts internally.
template <class Prop>
void for_all(std::uint64_t seed, int cases, Prop&& prop) {
    Gen g(seed);
    for (int i = 0; i < cases; ++i) prop(g);
}

}  // namespace kylesim::prop
