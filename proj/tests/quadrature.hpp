#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "tensens/ortho_poly.hpp"
#include "tensens/types.hpp"

// Gauss rules for the standardized measures, built with Golub-Welsch from the
// monic three-term recurrences. Weights sum to one.
struct Quadrature {
  std::vector<double> nodes, weights;
};

inline Quadrature golub_welsch(int n, const std::function<double(int)>& offdiag) {
  tensens::Matrix J = tensens::Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = offdiag(k);
  Eigen::SelfAdjointEigenSolver<tensens::Matrix> es(J);
  // Newton polish on the orthonormal recurrence, then Christoffel weights.
  auto eval = [&](double x, double& pn, double& dpn, double& sum_sq) {
    double p0 = 1, p1 = 0, d0 = 0, d1 = 0;
    sum_sq = 0;
    for (int k = 0; k < n; ++k) {
      sum_sq += p0 * p0;
      const double b = offdiag(k + 1), bprev = k > 0 ? offdiag(k) : 0.0;
      const double p2 = (x * p0 - bprev * p1) / b, d2 = (p0 + x * d0 - bprev * d1) / b;
      p1 = p0;
      p0 = p2;
      d1 = d0;
      d0 = d2;
    }
    pn = p0;
    dpn = d0;
  };
  Quadrature q;
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i), pn, dpn, s;
    for (int it = 0; it < 3; ++it) {
      eval(x, pn, dpn, s);
      x -= pn / dpn;
    }
    eval(x, pn, dpn, s);
    q.nodes.push_back(x);
    q.weights.push_back(1.0 / s);
  }
  return q;
}

inline Quadrature gauss_legendre(int n) {
  return golub_welsch(n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); });
}

inline Quadrature gauss_hermite(int n) {
  return golub_welsch(n, [](int k) { return std::sqrt(static_cast<double>(k)); });
}

inline Quadrature gauss_rule(tensens::PolyFamily f, int n) {
  return f == tensens::PolyFamily::Legendre ? gauss_legendre(n) : gauss_hermite(n);
}

// Integrates f over the product measure with n nodes per dimension; the
// variables listed in `fixed` are not integrated and keep the value in `point`.
inline double tensor_integrate(const std::vector<tensens::PolyFamily>& families, int n,
                               const std::function<double(std::span<const double>)>& f) {
  const std::size_t M = families.size();
  std::vector<Quadrature> rules;
  for (auto fam : families) rules.push_back(gauss_rule(fam, n));
  std::vector<std::size_t> idx(M, 0);
  std::vector<double> x(M);
  double total = 0;
  while (true) {
    double w = 1;
    for (std::size_t d = 0; d < M; ++d) {
      x[d] = rules[d].nodes[idx[d]];
      w *= rules[d].weights[idx[d]];
    }
    total += w * f(x);
    std::size_t d = 0;
    while (d < M && ++idx[d] == static_cast<std::size_t>(n)) idx[d++] = 0;
    if (d == M) break;
  }
  return total;
}

// Variance of E[f | X_u] by nested quadrature.
inline double conditional_variance(const std::vector<tensens::PolyFamily>& families, int n,
                                   const std::vector<std::size_t>& u,
                                   const std::function<double(std::span<const double>)>& f) {
  std::vector<tensens::PolyFamily> fu, fr;
  std::vector<bool> in(families.size(), false);
  for (auto i : u) in[i] = true;
  for (std::size_t i = 0; i < families.size(); ++i) (in[i] ? fu : fr).push_back(families[i]);
  auto cond_mean = [&](std::span<const double> xu) {
    if (fr.empty()) {
      return f(xu);
    }
    return tensor_integrate(fr, n, [&](std::span<const double> xr) {
      std::vector<double> x(families.size());
      for (std::size_t i = 0, a = 0, b = 0; i < families.size(); ++i) x[i] = in[i] ? xu[a++] : xr[b++];
      return f(x);
    });
  };
  const double m = tensor_integrate(fu, n, cond_mean);
  const double m2 = tensor_integrate(fu, n, [&](std::span<const double> xu) {
    const double c = cond_mean(xu);
    return c * c;
  });
  return m2 - m * m;
}
