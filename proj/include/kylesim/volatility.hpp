#pragma once

#include <vector>

namespace kylesim {

// sigma_Z(t): a constant, or piecewise constant on equal slices of [0, T].
class NoiseVol {
public:
    NoiseVol(double sigma = 1.0);
    NoiseVol(std::vector<double> levels, double horizon);

    double operator()(double t) const;
    double variance_rate(double t) const { double s = (*this)(t); return s * s; }
    // integral of sigma^2 over [t0, t1]
    double integrated(double t0, double t1) const;
    bool is_constant() const { return levels_.size() == 1; }
    const std::vector<double>& levels() const { return levels_; }
    double horizon() const { return horizon_; }

private:
    std::vector<double> levels_;
    double horizon_;
};

}  // namespace kylesim
