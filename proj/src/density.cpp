#include "kylesim/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kylesim {

const char* to_string(DensityKind k) {
    switch (k) {
        case DensityKind::gaussian: return "gaussian";
        case DensityKind::lognormal: return "lognormal";
        case DensityKind::kimura: return "kimura";
    }
    return "unknown";
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void need_unit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("Kimura state must lie in (0,1)");
}
}  // namespace

double kimura_log_density(double x, double y, double s2) {
    need_unit(x);
    need_unit(y);
    const double L = logit(y) - logit(x);
    return -0.5 * (kLog2Pi + std::log(s2)) + 0.5 * (std::log(x) + std::log1p(-x)) -
           1.5 * (std::log(y) + std::log1p(-y)) - s2 / 8.0 - L * L / (2.0 * s2);
}

double TransitionDensity::log_pdf(double x, double y, double s2) const {
    if (!(s2 > 0.0)) throw std::domain_error("transition variance must be positive");
    switch (kind) {
        case DensityKind::gaussian: {
            const double d = y - x;
            return -0.5 * (kLog2Pi + std::log(s2)) - d * d / (2.0 * s2);
        }
        case DensityKind::lognormal: {
            if (!(x > 0.0 && y > 0.0)) throw std::domain_error("lognormal states must be positive");
            const double d = std::log(y) - std::log(x) + 0.5 * s2;
            return -0.5 * (kLog2Pi + std::log(s2)) - std::log(y) - d * d / (2.0 * s2);
        }
        case DensityKind::kimura: return kimura_log_density(x, y, s2);
    }
    throw std::logic_error("unknown density");
}

double TransitionDensity::pdf(double x, double y, double s2) const { return std::exp(log_pdf(x, y, s2)); }

double TransitionDensity::score(double x, double y, double s2) const {
    switch (kind) {
        case DensityKind::gaussian: return (y - x) / s2;
        case DensityKind::lognormal:
            if (!(x > 0.0 && y > 0.0)) throw std::domain_error("lognormal states must be positive");
            return (std::log(y) - std::log(x) + 0.5 * s2) / (s2 * x);
        case DensityKind::kimura: {
            need_unit(x);
            need_unit(y);
            const double q = x * (1.0 - x);
            return (1.0 - 2.0 * x) / (2.0 * q) + (logit(y) - logit(x)) / (s2 * q);
        }
    }
    throw std::logic_error("unknown density");
}

double TransitionDensity::numeric_score(double x, double y, double s2, double h) const {
    const double step = h * std::max(1.0, std::abs(x));
    return (log_pdf(x + step, y, s2) - log_pdf(x - step, y, s2)) / (2.0 * step);
}

}  // namespace kylesim
