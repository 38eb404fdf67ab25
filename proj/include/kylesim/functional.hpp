#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kylesim/path.hpp"

namespace kylesim {

// Read access to values[0..k] only.
class StoppedView {
public:
    StoppedView(const SamplePath& path, std::size_t k);

    double operator[](std::size_t i) const;
    double current() const { return path_[k_]; }
    std::size_t index() const { return k_; }
    double time() const { return path_.time(k_); }
    double time(std::size_t i) const;
    const TimeGrid& grid() const { return path_.grid(); }
    std::uint64_t source_id() const { return path_.id(); }

private:
    const SamplePath& path_;
    std::size_t k_;
};

// Path surgery applied after the stop index: a jump at t_k, a flat extension of
// `extension` grid steps, then a jump at the end of the extension.
struct Surgery {
    double jump = 0.0;
    std::size_t extension = 0;
    double post_jump = 0.0;
};

class PathFunctional {
public:
    virtual ~PathFunctional() = default;
    virtual double evaluate(const StoppedView& y, const Surgery& s) const = 0;
    virtual std::optional<double> analytic_vertical(const StoppedView&) const { return std::nullopt; }
    virtual std::optional<double> analytic_vertical_second(const StoppedView&) const { return std::nullopt; }
    virtual std::optional<double> analytic_horizontal(const StoppedView&) const { return std::nullopt; }

    double operator()(const SamplePath& path, std::size_t k) const {
        return evaluate(StoppedView(path, k), Surgery{});
    }
};

enum class Scheme { central, forward };
// terminal_jump: the bump is a jump at t_k after the last increment;
// node_shift: the literal vertical_bump of the sampled path.
enum class BumpMode { terminal_jump, node_shift };

struct DerivativeConfig {
    double h_v = 1e-4;           // scaled by max(1, |Y_k|)
    std::size_t horizontal_steps = 1;
    Scheme scheme = Scheme::central;
    BumpMode bump = BumpMode::terminal_jump;
    bool prefer_analytic = true;
    double nested_scale = 0.1;   // nested bump = nested_scale * sqrt(h_v) * max(1, |Y_k|)
    double tolerance = 0.0;      // commutator noise warning threshold, 0 = off
};

double vertical_derivative(const PathFunctional& f, const SamplePath& path, std::size_t k,
                           const DerivativeConfig& cfg = {});
double vertical_second(const PathFunctional& f, const SamplePath& path, std::size_t k,
                       const DerivativeConfig& cfg = {});
double horizontal_derivative(const PathFunctional& f, const SamplePath& path, std::size_t k,
                             const DerivativeConfig& cfg = {});

struct CommutatorResult {
    double value = 0.0;
    double noise = 0.0;   // round-off amplification estimate
    bool noisy = false;   // noise above cfg.tolerance
};
CommutatorResult commutator(const PathFunctional& f, const SamplePath& path, std::size_t k,
                            const DerivativeConfig& cfg = {});

// d[Y,Y] over a step: realized (dY)^2, or the model rate times dt.
enum class QvMeasure { realized, model_rate };
double ito_residual(const PathFunctional& f, const SamplePath& path,
                    const DerivativeConfig& cfg = {}, QvMeasure qv = QvMeasure::realized,
                    double qv_rate = 1.0);

// ---- reference functionals ----

// G(t, Y_t)
class StateFunctional : public PathFunctional {
public:
    explicit StateFunctional(std::function<double(double, double)> g) : g_(std::move(g)) {}
    double evaluate(const StoppedView& y, const Surgery& s) const override;

private:
    std::function<double(double, double)> g_;
};

// int_0^t h(Y_s) ds, left-point sum
class TimeIntegralFunctional : public PathFunctional {
public:
    explicit TimeIntegralFunctional(std::function<double(double)> h) : h_(std::move(h)) {}
    double evaluate(const StoppedView& y, const Surgery& s) const override;

private:
    std::function<double(double)> h_;
    mutable std::uint64_t cache_id_ = 0;
    mutable std::vector<double> prefix_;
};

// How a stochastic integral evolves on a flat extension.
//   qv_frozen: the path keeps its QV rate a, so the integral drifts by -a/2 df/dy
//   integrand_frozen: zero increments, the integral stays put
enum class ExtensionConvention { qv_frozen, integrand_frozen };

// int_0^t f(s, W_s) dW_s, left-point sum; jumps integrate f across the jump.
class ItoIntegralFunctional : public PathFunctional {
public:
    ItoIntegralFunctional(std::function<double(double, double)> f,
                          std::function<double(double, double)> df_dy, double qv_rate = 1.0,
                          ExtensionConvention conv = ExtensionConvention::qv_frozen);
    double evaluate(const StoppedView& y, const Surgery& s) const override;

private:
    double across_jump(double t, double y, double h) const;

    std::function<double(double, double)> f_;
    std::function<double(double, double)> df_dy_;
    double qv_rate_;
    ExtensionConvention conv_;
    mutable std::uint64_t cache_id_ = 0;
    mutable std::vector<double> prefix_;
};

// ---- identity suite ----

struct IdentityCheck {
    std::string name;
    double max_error = 0.0;   // max over paths and nodes of |numeric - exact| / max(1, |exact|)
    double tolerance = 0.0;
    std::size_t evaluations = 0;
    bool pass = false;
};
// The reference derivative identities on seeded Brownian paths, every interior node.
std::vector<IdentityCheck> calculus_identities(std::size_t n_paths = 100, std::size_t n_steps = 4096,
                                               std::uint64_t seed = 1, const DerivativeConfig& cfg = {});

}  // namespace kylesim
