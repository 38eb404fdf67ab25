#pragma once

#include <cstddef>
#include <vector>

namespace kylesim {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;   // sample sd / sqrt(n)
    double sd = 0.0;
    std::size_t n = 0;
};
MeanSe mean_se(const std::vector<double>& x);

// P(K > lambda) for the Kolmogorov distribution
double kolmogorov_survival(double lambda);

struct KsResult {
    double D = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};
// one-sample KS against N(0, 1) with the Stephens small-sample correction
KsResult ks_normal(std::vector<double> x);

struct LjungBoxResult {
    double Q = 0.0;
    double p_value = 1.0;
    std::size_t lags = 0;
    std::vector<double> rho;
};
// Pooled over a panel of equal-length series (rows of `x`, row length `len`):
// Q = sum_h n_h rho_h^2 with n_h the number of lag-h pairs, chi^2(lags) under the null.
LjungBoxResult ljung_box_panel(const std::vector<double>& x, std::size_t len, std::size_t lags);
LjungBoxResult ljung_box(const std::vector<double>& x, std::size_t lags);

struct OlsResult {
    double intercept = 0.0, slope = 0.0;
    double se_intercept = 0.0, se_slope = 0.0;   // HC1 heteroskedasticity-robust
    double var_x = 0.0;
    std::size_t n = 0;
};
// y = a + b x; throws on fewer than 3 points or degenerate x
OlsResult ols_hc1(const std::vector<double>& x, const std::vector<double>& y);

// least-squares slope of log y on log x
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct Bin {
    double x_mean = 0.0, y_mean = 0.0, y_se = 0.0;
    std::size_t n = 0;
};
// equal-count bins on x
std::vector<Bin> binned_means(const std::vector<double>& x, const std::vector<double>& y, std::size_t bins);

}  // namespace kylesim
