#include "kylesim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace kylesim {

MeanSe mean_se(const std::vector<double>& x) {
    MeanSe r;
    double m = 0.0, s = 0.0;
    for (double v : x) {
        ++r.n;
        const double d = v - m;
        m += d / static_cast<double>(r.n);
        s += d * (v - m);
    }
    r.mean = m;
    if (r.n > 1) {
        r.sd = std::sqrt(s / static_cast<double>(r.n - 1));
        r.se = r.sd / std::sqrt(static_cast<double>(r.n));
    }
    return r;
}

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // theta-function form converges fast for small lambda
        const double c = M_PI * M_PI / (8.0 * lambda * lambda);
        double s = 0.0;
        for (int j = 1; j < 20; j += 2) s += std::exp(-c * j * j);
        return 1.0 - std::sqrt(2.0 * M_PI) / lambda * s;
    }
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        s += (j % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_normal(std::vector<double> x) {
    KsResult r;
    r.n = x.size();
    if (r.n == 0) throw std::invalid_argument("KS test of an empty sample");
    std::sort(x.begin(), x.end());
    const boost::math::normal_distribution<double> z;
    const double n = static_cast<double>(r.n);
    double D = 0.0;
    for (std::size_t i = 0; i < r.n; ++i) {
        const double F = boost::math::cdf(z, x[i]);
        D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    r.D = D;
    const double sn = std::sqrt(n);
    r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * D);
    return r;
}

LjungBoxResult ljung_box_panel(const std::vector<double>& x, std::size_t len, std::size_t lags) {
    if (len == 0 || x.size() % len != 0) throw std::invalid_argument("Ljung-Box panel shape mismatch");
    if (lags == 0 || lags >= len) throw std::invalid_argument("Ljung-Box needs 0 < lags < series length");
    const std::size_t rows = x.size() / len;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    if (!(c0 > 0.0)) throw std::invalid_argument("Ljung-Box of a constant sample");
    LjungBoxResult r;
    r.lags = lags;
    for (std::size_t h = 1; h <= lags; ++h) {
        double c = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            const double* row = x.data() + i * len;
            for (std::size_t t = 0; t + h < len; ++t) c += (row[t] - mean) * (row[t + h] - mean);
        }
        const double pairs = static_cast<double>(rows * (len - h));
        // normalize per pair so rho_h has variance 1 / pairs under the null
        const double rho = (c / pairs) / (c0 / static_cast<double>(x.size()));
        r.rho.push_back(rho);
        r.Q += pairs * rho * rho;
    }
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(lags));
    r.p_value = boost::math::cdf(boost::math::complement(chi, r.Q));
    return r;
}

LjungBoxResult ljung_box(const std::vector<double>& x, std::size_t lags) {
    const double n = static_cast<double>(x.size());
    LjungBoxResult r = ljung_box_panel(x, x.size(), lags);
    // classical small-sample weights n(n+2)/(n-h) on the usual autocorrelations
    r.Q = 0.0;
    for (std::size_t h = 1; h <= lags; ++h) {
        const double pairs = n - static_cast<double>(h);
        r.rho[h - 1] *= pairs / n;
        r.Q += n * (n + 2.0) * r.rho[h - 1] * r.rho[h - 1] / pairs;
    }
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(lags));
    r.p_value = boost::math::cdf(boost::math::complement(chi, r.Q));
    return r;
}

OlsResult ols_hc1(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("regression sample size mismatch");
    OlsResult r;
    r.n = x.size();
    if (r.n < 3) throw std::invalid_argument("regression needs at least 3 points");
    const double n = static_cast<double>(r.n);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < r.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    r.var_x = sxx / (n - 1.0);
    if (!(sxx > 0.0) || r.var_x < 1e-14 * (1.0 + mx * mx)) throw std::invalid_argument("degenerate regressor variance");
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    // sandwich (X'X)^-1 X' diag(e^2) X (X'X)^-1, scaled by n / (n - 2)
    double sx = 0.0, sxx_raw = 0.0;
    for (double v : x) {
        sx += v;
        sxx_raw += v * v;
    }
    const double det = n * sxx_raw - sx * sx;
    const double a00 = sxx_raw / det, a01 = -sx / det, a11 = n / det;
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (std::size_t i = 0; i < r.n; ++i) {
        const double e = y[i] - r.intercept - r.slope * x[i];
        const double e2 = e * e;
        m00 += e2;
        m01 += e2 * x[i];
        m11 += e2 * x[i] * x[i];
    }
    const double scale = n / (n - 2.0);
    const double v00 = a00 * (a00 * m00 + a01 * m01) + a01 * (a00 * m01 + a01 * m11);
    const double v11 = a01 * (a01 * m00 + a11 * m01) + a11 * (a01 * m01 + a11 * m11);
    r.se_intercept = std::sqrt(scale * v00);
    r.se_slope = std::sqrt(scale * v11);
    return r;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log-log fit needs matched points");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("log-log fit needs distinct x");
    return sxy / sxx;
}

std::vector<Bin> binned_means(const std::vector<double>& x, const std::vector<double>& y, std::size_t bins) {
    if (x.size() != y.size()) throw std::invalid_argument("binning sample size mismatch");
    if (bins == 0 || x.size() < bins) throw std::invalid_argument("too few points for the bins");
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<Bin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * x.size() / bins, hi = (b + 1) * x.size() / bins;
        std::vector<double> ys;
        double xs = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            xs += x[idx[j]];
            ys.push_back(y[idx[j]]);
        }
        const MeanSe m = mean_se(ys);
        out[b] = Bin{xs / static_cast<double>(hi - lo), m.mean, m.se, hi - lo};
    }
    return out;
}

}  // namespace kylesim
