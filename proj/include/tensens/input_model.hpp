#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tensens {

// Standard-normal helpers. `normal_quantile` is a rational approximation
// refined by one Halley step, accurate to ~1e-15 relative on (0,1).
double normal_cdf(double u);
double normal_sf(double u);  // 1 - normal_cdf(u) without cancellation
double normal_quantile(double p);

struct LognormalParams {
  double lambda;  // mean of ln X
  double zeta;    // std of ln X
};

struct GumbelParams {
  double location;
  double scale;
};

LognormalParams lognormal_params(double mean, double cov);
GumbelParams gumbel_params(double mean, double cov);

inline constexpr double kEulerGamma = 0.57721566490153286060651209;

enum class StandardFamily { Uniform, Gaussian };

/// One independent input variable. Construct through the named factories,
/// which validate parameters and precompute the derived ones.
class Marginal {
 public:
  struct Uniform {
    double lower, upper;
  };
  struct Gaussian {
    double mean, std;
  };
  struct Lognormal {
    double mean, cov;
    LognormalParams params;
  };
  struct Gumbel {
    double mean, cov;
    GumbelParams params;
  };
  using Family = std::variant<Uniform, Gaussian, Lognormal, Gumbel>;

  static Marginal uniform(double lower, double upper);
  static Marginal gaussian(double mean, double std);
  static Marginal lognormal(double mean, double cov);
  static Marginal gumbel(double mean, double cov);

  const Family& family() const noexcept { return family_; }
  std::string family_name() const;
  StandardFamily standard_family() const noexcept;

  double mean() const;
  double std_dev() const;
  double cdf(double x) const;
  double pdf(double x) const;
  bool in_support(double x) const;

  /// Physical value -> standardized coordinate (U[-1,1] or N(0,1)).
  double to_standard(double x) const;
  double from_standard(double u) const;
  /// Physical value at unit-hypercube coordinate t in (0,1).
  double from_unit(double t) const;
  /// Standardized coordinate at unit-hypercube coordinate t in (0,1).
  double standard_from_unit(double t) const;

 private:
  explicit Marginal(Family f) : family_(f) {}
  Family family_;
};

struct NamedMarginal {
  std::string name;
  Marginal marginal;
};

/// Independent input random vector with its isoprobabilistic map.
class InputModel {
 public:
  explicit InputModel(std::vector<NamedMarginal> marginals);

  std::size_t dim() const noexcept { return marginals_.size(); }
  const Marginal& marginal(std::size_t i) const { return marginals_[i].marginal; }
  const std::string& name(std::size_t i) const { return marginals_[i].name; }
  const std::vector<NamedMarginal>& marginals() const noexcept { return marginals_; }
  StandardFamily standard_family(std::size_t i) const { return marginal(i).standard_family(); }

  void to_standard(std::span<const double> x, std::span<double> u) const;
  void from_standard(std::span<const double> u, std::span<double> x) const;
  std::vector<double> to_standard(std::span<const double> x) const;
  std::vector<double> from_standard(std::span<const double> u) const;

  /// Input model with `n` identical marginals named x1..xn.
  static InputModel iid(std::size_t n, const Marginal& m);

 private:
  std::vector<NamedMarginal> marginals_;
};

}  // namespace tensens
