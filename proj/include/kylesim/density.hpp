#pragma once

namespace kylesim {

// Transition densities p(x -> y) over a horizon; s2 is the integrated variance
// of the driving coordinate (the price, its log, or its logit).
enum class DensityKind { gaussian, lognormal, kimura };

const char* to_string(DensityKind k);

struct TransitionDensity {
    DensityKind kind;

    double log_pdf(double x, double y, double s2) const;
    double pdf(double x, double y, double s2) const;
    // d/dx log p, closed form
    double score(double x, double y, double s2) const;
    // d/dx log p by central difference of log_pdf
    double numeric_score(double x, double y, double s2, double h = 1e-6) const;
};

// Kimura dP = c P(1-P) dW: density with s2 = c^2 (T - t)
double kimura_log_density(double x, double y, double s2);

double logit(double p);
double sigmoid(double u);

}  // namespace kylesim
