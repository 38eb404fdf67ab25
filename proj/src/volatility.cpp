#include "kylesim/volatility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kylesim {

NoiseVol::NoiseVol(double sigma) : levels_{sigma}, horizon_(1.0) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma_Z must be positive");
}

NoiseVol::NoiseVol(std::vector<double> levels, double horizon)
    : levels_(std::move(levels)), horizon_(horizon) {
    if (levels_.empty()) throw std::invalid_argument("sigma_Z table is empty");
    if (!(horizon > 0.0)) throw std::invalid_argument("sigma_Z table horizon must be positive");
    for (double s : levels_)
        if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("sigma_Z must be positive");
}

double NoiseVol::operator()(double t) const {
    if (levels_.size() == 1) return levels_[0];
    const double w = horizon_ / static_cast<double>(levels_.size());
    auto i = static_cast<long>(std::floor(t / w));
    i = std::clamp<long>(i, 0, static_cast<long>(levels_.size()) - 1);
    return levels_[static_cast<std::size_t>(i)];
}

double NoiseVol::integrated(double t0, double t1) const {
    if (t1 < t0) return -integrated(t1, t0);
    if (levels_.size() == 1) return levels_[0] * levels_[0] * (t1 - t0);
    const std::size_t m = levels_.size();
    const double w = horizon_ / static_cast<double>(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double a = i == 0 ? -1e300 : static_cast<double>(i) * w;
        double b = i + 1 == m ? 1e300 : static_cast<double>(i + 1) * w;
        a = std::max(a, t0);
        b = std::min(b, t1);
        if (b > a) acc += levels_[i] * levels_[i] * (b - a);
    }
    return acc;
}

}  // namespace kylesim
