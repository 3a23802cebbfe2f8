#include "tensens/input_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tensens/error.hpp"

namespace tensens {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr const char* kStage = "input_model";

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double checked(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorCode::NonFinite, std::string(what) + " produced a non-finite value", kStage);
  return v;
}

// Acklam's rational approximation of the normal quantile.
double quantile_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log1p(-p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_cdf(double u) { return 0.5 * std::erfc(-u / kSqrt2); }

double normal_sf(double u) { return 0.5 * std::erfc(u / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    fail(ErrorCode::DomainError, "normal_quantile requires p in [0,1]", kStage);
  }
  // Refine in the tail where p is represented exactly.
  if (p > 0.5) {
    const double q = 1.0 - p;
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    return -normal_quantile(q);
  }
  double x = quantile_initial(p);
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

LognormalParams lognormal_params(double mean, double cov) {
  if (!(mean > 0.0) || !(cov > 0.0) || !std::isfinite(mean) || !std::isfinite(cov))
    fail(ErrorCode::InvalidParameter, "lognormal requires mean > 0 and cov > 0", kStage);
  const double zeta = std::sqrt(std::log1p(cov * cov));
  return {std::log(mean) - 0.5 * zeta * zeta, zeta};
}

GumbelParams gumbel_params(double mean, double cov) {
  if (!(cov > 0.0) || !std::isfinite(mean) || !std::isfinite(cov) || mean == 0.0)
    fail(ErrorCode::InvalidParameter, "gumbel requires cov > 0 and a non-zero finite mean", kStage);
  const double scale = std::abs(mean) * cov * std::sqrt(6.0) / std::numbers::pi;
  return {mean - kEulerGamma * scale, scale};
}

Marginal Marginal::uniform(double lower, double upper) {
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
    fail(ErrorCode::InvalidParameter, "uniform requires finite bounds with upper > lower", kStage);
  return Marginal(Uniform{lower, upper});
}

Marginal Marginal::gaussian(double mean, double std) {
  if (!(std > 0.0) || !std::isfinite(mean) || !std::isfinite(std))
    fail(ErrorCode::InvalidParameter, "gaussian requires std > 0", kStage);
  return Marginal(Gaussian{mean, std});
}

Marginal Marginal::lognormal(double mean, double cov) {
  return Marginal(Lognormal{mean, cov, lognormal_params(mean, cov)});
}

Marginal Marginal::gumbel(double mean, double cov) {
  return Marginal(Gumbel{mean, cov, gumbel_params(mean, cov)});
}

std::string Marginal::family_name() const {
  return std::visit(overloaded{[](const Uniform&) { return "uniform"; },
                               [](const Gaussian&) { return "gaussian"; },
                               [](const Lognormal&) { return "lognormal"; },
                               [](const Gumbel&) { return "gumbel"; }},
                    family_);
}

StandardFamily Marginal::standard_family() const noexcept {
  return std::holds_alternative<Uniform>(family_) ? StandardFamily::Uniform : StandardFamily::Gaussian;
}

double Marginal::mean() const {
  return std::visit(overloaded{[](const Uniform& f) { return 0.5 * (f.lower + f.upper); },
                               [](const Gaussian& f) { return f.mean; },
                               [](const Lognormal& f) { return f.mean; },
                               [](const Gumbel& f) { return f.mean; }},
                    family_);
}

double Marginal::std_dev() const {
  return std::visit(overloaded{[](const Uniform& f) { return (f.upper - f.lower) / std::sqrt(12.0); },
                               [](const Gaussian& f) { return f.std; },
                               [](const Lognormal& f) { return f.mean * f.cov; },
                               [](const Gumbel& f) { return std::abs(f.mean) * f.cov; }},
                    family_);
}

bool Marginal::in_support(double x) const {
  if (!std::isfinite(x)) return false;
  return std::visit(overloaded{[x](const Uniform& f) { return x >= f.lower && x <= f.upper; },
                               [](const Gaussian&) { return true; },
                               [x](const Lognormal&) { return x > 0.0; },
                               [](const Gumbel&) { return true; }},
                    family_);
}

double Marginal::cdf(double x) const {
  return std::visit(
      overloaded{[x](const Uniform& f) { return std::clamp((x - f.lower) / (f.upper - f.lower), 0.0, 1.0); },
                 [x](const Gaussian& f) { return normal_cdf((x - f.mean) / f.std); },
                 [x](const Lognormal& f) {
                   return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - f.params.lambda) / f.params.zeta);
                 },
                 [x](const Gumbel& f) {
                   return std::exp(-std::exp(-(x - f.params.location) / f.params.scale));
                 }},
      family_);
}

double Marginal::pdf(double x) const {
  return std::visit(
      overloaded{[x](const Uniform& f) { return (x < f.lower || x > f.upper) ? 0.0 : 1.0 / (f.upper - f.lower); },
                 [x](const Gaussian& f) {
                   const double z = (x - f.mean) / f.std;
                   return std::exp(-0.5 * z * z) / (f.std * std::sqrt(2.0 * std::numbers::pi));
                 },
                 [x](const Lognormal& f) {
                   if (x <= 0.0) return 0.0;
                   const double z = (std::log(x) - f.params.lambda) / f.params.zeta;
                   return std::exp(-0.5 * z * z) / (x * f.params.zeta * std::sqrt(2.0 * std::numbers::pi));
                 },
                 [x](const Gumbel& f) {
                   const double z = (x - f.params.location) / f.params.scale;
                   return std::exp(-(z + std::exp(-z))) / f.params.scale;
                 }},
      family_);
}

double Marginal::to_standard(double x) const {
  if (!in_support(x)) fail(ErrorCode::OutOfSupport, "value " + std::to_string(x) + " outside support", kStage);
  const double u = std::visit(
      overloaded{[x](const Uniform& f) { return 2.0 * (x - f.lower) / (f.upper - f.lower) - 1.0; },
                 [x](const Gaussian& f) { return (x - f.mean) / f.std; },
                 [x](const Lognormal& f) { return (std::log(x) - f.params.lambda) / f.params.zeta; },
                 [x](const Gumbel& f) {
                   const double t = std::exp(-(x - f.params.location) / f.params.scale);
                   const double cdf = std::exp(-t);
                   if (cdf <= 0.5) return normal_quantile(cdf);
                   return -normal_quantile(-std::expm1(-t));
                 }},
      family_);
  return checked(u, "to_standard");
}

double Marginal::from_standard(double u) const {
  if (!std::isfinite(u)) fail(ErrorCode::NonFinite, "standardized coordinate is not finite", kStage);
  const double x = std::visit(
      overloaded{[u](const Uniform& f) { return f.lower + 0.5 * (u + 1.0) * (f.upper - f.lower); },
                 [u](const Gaussian& f) { return f.mean + f.std * u; },
                 [u](const Lognormal& f) { return std::exp(f.params.lambda + f.params.zeta * u); },
                 [u](const Gumbel& f) {
                   const double log_cdf = u <= 0.0 ? std::log(normal_cdf(u)) : std::log1p(-normal_sf(u));
                   return f.params.location - f.params.scale * std::log(-log_cdf);
                 }},
      family_);
  return checked(x, "from_standard");
}

double Marginal::standard_from_unit(double t) const {
  if (!(t > 0.0 && t < 1.0) && !(standard_family() == StandardFamily::Uniform && t == 0.0))
    fail(ErrorCode::OutOfSupport, "unit coordinate must lie in (0,1)", kStage);
  if (standard_family() == StandardFamily::Uniform) return 2.0 * t - 1.0;
  return normal_quantile(t);
}

double Marginal::from_unit(double t) const {
  if (const auto* f = std::get_if<Uniform>(&family_)) {
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::OutOfSupport, "unit coordinate must lie in [0,1]", kStage);
    return f->lower + t * (f->upper - f->lower);
  }
  return from_standard(standard_from_unit(t));
}

InputModel::InputModel(std::vector<NamedMarginal> marginals) : marginals_(std::move(marginals)) {
  if (marginals_.empty()) fail(ErrorCode::InvalidParameter, "input model needs at least one marginal", kStage);
}

void InputModel::to_standard(std::span<const double> x, std::span<double> u) const {
  if (x.size() != dim() || u.size() != dim())
    fail(ErrorCode::InvalidParameter, "point dimension does not match input model", kStage);
  for (std::size_t i = 0; i < dim(); ++i) u[i] = marginal(i).to_standard(x[i]);
}

void InputModel::from_standard(std::span<const double> u, std::span<double> x) const {
  if (x.size() != dim() || u.size() != dim())
    fail(ErrorCode::InvalidParameter, "point dimension does not match input model", kStage);
  for (std::size_t i = 0; i < dim(); ++i) x[i] = marginal(i).from_standard(u[i]);
}

std::vector<double> InputModel::to_standard(std::span<const double> x) const {
  std::vector<double> u(dim());
  to_standard(x, u);
  return u;
}

std::vector<double> InputModel::from_standard(std::span<const double> u) const {
  std::vector<double> x(dim());
  from_standard(u, x);
  return x;
}

InputModel InputModel::iid(std::size_t n, const Marginal& m) {
  std::vector<NamedMarginal> ms;
  ms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ms.push_back({"x" + std::to_string(i + 1), m});
  return InputModel(std::move(ms));
}

}  // namespace tensens
