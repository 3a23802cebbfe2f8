#include "tensens/benchmarks.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tensens/error.hpp"

namespace tensens {

namespace {

const Marginal::Lognormal& lognormal_of(const InputModel& input, std::size_t i, const char* stage) {
  const auto* ln = std::get_if<Marginal::Lognormal>(&input.marginal(i).family());
  if (!ln) fail(ErrorCode::InvalidParameter, "input " + input.name(i) + " must be lognormal", stage);
  return *ln;
}

struct Bar {
  int n1, n2;
  bool chord;  // chord bars use (A1, E1); web bars use (A2, E2)
};

struct TrussGeometry {
  std::array<std::array<double, 2>, kTrussNodes> nodes;
  std::array<Bar, kTrussBars> bars;
};

// Warren truss: bottom chord nodes 0..6 at x = 0, 4, ..., 24 m; top chord
// nodes 7..12 at x = 2, 6, ..., 22 m and y = 2 m.
const TrussGeometry& truss_geometry() {
  static const TrussGeometry g = [] {
    TrussGeometry t{};
    for (int k = 0; k < 7; ++k) t.nodes[k] = {4.0 * k, 0.0};
    for (int k = 0; k < 6; ++k) t.nodes[7 + k] = {2.0 + 4.0 * k, 2.0};
    std::size_t b = 0;
    for (int k = 0; k < 6; ++k) t.bars[b++] = {k, k + 1, true};
    for (int k = 0; k < 5; ++k) t.bars[b++] = {7 + k, 8 + k, true};
    for (int k = 0; k < 6; ++k) {
      t.bars[b++] = {k, 7 + k, false};
      t.bars[b++] = {7 + k, k + 1, false};
    }
    return t;
  }();
  return g;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> sobol_g_constants() {
  std::vector<double> c{1, 2, 5, 10, 20, 50, 100};
  c.resize(20, 500.0);
  return c;
}

double sobol_function(std::span<const double> x, std::span<const double> c) {
  if (x.size() != c.size()) fail(ErrorCode::InvalidParameter, "x and c lengths differ", "benchmarks.sobol_function");
  double y = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      fail(ErrorCode::OutOfSupport, "input " + std::to_string(i + 1) + " outside [0,1]", "benchmarks.sobol_function");
    y *= (std::abs(4.0 * x[i] - 2.0) + c[i]) / (1.0 + c[i]);
  }
  return y;
}

double sobol_g_partial_variance(double c) { return 1.0 / (3.0 * (1.0 + c) * (1.0 + c)); }

double sobol_g_variance(std::span<const double> c) {
  double p = 1.0;
  for (double ci : c) p *= 1.0 + sobol_g_partial_variance(ci);
  return p - 1.0;
}

double sobol_g_interaction(std::span<const double> c, std::span<const std::size_t> u) {
  double p = 1.0;
  for (auto i : u) p *= sobol_g_partial_variance(c[i]);
  return p / sobol_g_variance(c);
}

double sobol_g_first(std::span<const double> c, std::span<const std::size_t> u) {
  double p = 1.0;
  for (auto i : u) p *= 1.0 + sobol_g_partial_variance(c[i]);
  return (p - 1.0) / sobol_g_variance(c);
}

double sobol_g_total(std::span<const double> c, std::span<const std::size_t> u) {
  std::vector<bool> in(c.size(), false);
  for (auto i : u) in[i] = true;
  std::vector<std::size_t> complement;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!in[i]) complement.push_back(i);
  }
  if (complement.empty()) return 1.0;
  return 1.0 - sobol_g_first(c, complement);
}

std::vector<double> lognormal_product_first(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  const double D = std::expm1(s);
  std::vector<double> out;
  for (double x : v) out.push_back(std::expm1(x) / D);
  return out;
}

std::vector<double> lognormal_product_total(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  const double D = std::expm1(s);
  std::vector<double> out;
  for (double x : v) out.push_back(1.0 - std::expm1(s - x) / D);
  return out;
}

double beam_deflection(double b, double h, double L, double E, double P) {
  if (!(b > 0 && h > 0 && L > 0 && E > 0 && P > 0))
    fail(ErrorCode::InvalidParameter, "beam parameters must be positive", "benchmarks.beam");
  return P * L * L * L / (4.0 * E * b * h * h * h);
}

InputModel beam_input() {
  return InputModel({{"b", Marginal::lognormal(0.15, 0.05)},
                     {"h", Marginal::lognormal(0.3, 0.05)},
                     {"L", Marginal::lognormal(5.0, 0.01)},
                     {"E", Marginal::lognormal(3e10, 0.15)},
                     {"P", Marginal::lognormal(1e4, 0.20)}});
}

std::vector<double> beam_exponent_variances(const InputModel& input) {
  constexpr const char* stage = "benchmarks.beam_exact_moments";
  if (input.dim() != 5) fail(ErrorCode::InvalidParameter, "beam model has five inputs", stage);
  constexpr double power[] = {-1.0, -3.0, 3.0, -1.0, 1.0};
  std::vector<double> v;
  for (std::size_t i = 0; i < 5; ++i) {
    const double z = lognormal_of(input, i, stage).params.zeta;
    v.push_back(power[i] * power[i] * z * z);
  }
  return v;
}

LognormalMoments beam_exact_moments(const InputModel& input) {
  constexpr const char* stage = "benchmarks.beam_exact_moments";
  const auto v = beam_exponent_variances(input);
  constexpr double power[] = {-1.0, -3.0, 3.0, -1.0, 1.0};
  double lambda = -std::log(4.0), zeta2 = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    lambda += power[i] * lognormal_of(input, i, stage).params.lambda;
    zeta2 += v[i];
  }
  const double mean = std::exp(lambda + 0.5 * zeta2);
  return {mean, mean * std::sqrt(std::expm1(zeta2))};
}

double truss_deflection(std::span<const double> x) {
  constexpr const char* stage = "benchmarks.truss";
  if (x.size() != 10) fail(ErrorCode::InvalidParameter, "truss model has ten inputs", stage);
  const double A1 = x[0], A2 = x[1], E1 = x[2], E2 = x[3];
  if (!(A1 > 0 && A2 > 0 && E1 > 0 && E2 > 0))
    fail(ErrorCode::SingularStiffness, "areas and moduli must be positive", stage);
  const auto& g = truss_geometry();
  constexpr int ndof = 2 * kTrussNodes;
  Eigen::Matrix<double, ndof, ndof> K = Eigen::Matrix<double, ndof, ndof>::Zero();
  for (const auto& bar : g.bars) {
    const double dx = g.nodes[bar.n2][0] - g.nodes[bar.n1][0];
    const double dy = g.nodes[bar.n2][1] - g.nodes[bar.n1][1];
    const double len = std::hypot(dx, dy);
    const double c = dx / len, s = dy / len;
    const double k = (bar.chord ? A1 * E1 : A2 * E2) / len;
    const double local[4] = {c, s, -c, -s};
    const int dof[4] = {2 * bar.n1, 2 * bar.n1 + 1, 2 * bar.n2, 2 * bar.n2 + 1};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) K(dof[a], dof[b]) += k * local[a] * local[b];
    }
  }
  Eigen::Matrix<double, ndof, 1> F = Eigen::Matrix<double, ndof, 1>::Zero();
  for (int k = 0; k < 6; ++k) F(2 * (7 + k) + 1) = -x[4 + static_cast<std::size_t>(k)];

  // Pin at node 0, roller (vertical restraint) at node 6.
  std::vector<int> free;
  for (int d = 0; d < ndof; ++d) {
    if (d != 0 && d != 1 && d != 13) free.push_back(d);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  Matrix Kf(nf, nf);
  Vector Ff(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    Ff(a) = F(free[a]);
    for (Eigen::Index b = 0; b < nf; ++b) Kf(a, b) = K(free[a], free[b]);
  }
  Eigen::LLT<Matrix> llt(Kf);
  if (llt.info() != Eigen::Success) fail(ErrorCode::SingularStiffness, "stiffness matrix is not positive definite", stage);
  const Vector u = llt.solve(Ff);
  // Node 3 (x = 12 m) is the midspan bottom-chord node; its uy is free dof index of 7.
  const auto it = std::find(free.begin(), free.end(), 7);
  return -u(static_cast<Eigen::Index>(it - free.begin()));
}

InputModel truss_input() {
  std::vector<NamedMarginal> m{{"A1", Marginal::lognormal(2e-3, 0.10)},
                               {"A2", Marginal::lognormal(1e-3, 0.10)},
                               {"E1", Marginal::lognormal(2.1e11, 0.10)},
                               {"E2", Marginal::lognormal(2.1e11, 0.10)}};
  for (int k = 1; k <= 6; ++k) m.push_back({"P" + std::to_string(k), Marginal::gumbel(5e4, 0.15)});
  return InputModel(std::move(m));
}

PointMatrix square_grid(std::size_t nx, std::size_t ny, double x0, double x1, double y0, double y1) {
  if (nx < 1 || ny < 1) fail(ErrorCode::InvalidParameter, "grid needs at least one point per axis", "benchmarks.eole");
  PointMatrix g(static_cast<Eigen::Index>(nx * ny), 2);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto r = static_cast<Eigen::Index>(j * nx + i);
      g(r, 0) = nx == 1 ? x0 : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx - 1);
      g(r, 1) = ny == 1 ? y0 : y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny - 1);
    }
  }
  return g;
}

double gaussian_correlation(std::span<const double> z1, std::span<const double> z2, double ell) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < z1.size(); ++k) d2 += (z1[k] - z2[k]) * (z1[k] - z2[k]);
  return std::exp(-d2 / (ell * ell));
}

EoleBasis eole_basis(const PointMatrix& grid, double ell, double threshold) {
  constexpr const char* stage = "benchmarks.eole_basis";
  if (!(ell > 0.0)) fail(ErrorCode::InvalidParameter, "correlation length must be positive", stage);
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::InvalidParameter, "threshold must lie in (0,1)", stage);
  const Eigen::Index n = grid.rows();
  if (n < 1) fail(ErrorCode::InvalidParameter, "empty grid", stage);
  Matrix C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) C(i, j) = gaussian_correlation(row_span(grid, i), row_span(grid, j), ell);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(C);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigenFailure, "symmetric eigensolver did not converge", stage);
  EoleBasis basis;
  basis.grid = grid;
  basis.correlation_length = ell;
  basis.eigenvalues = es.eigenvalues().reverse();
  basis.eigenvectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    double& l = basis.eigenvalues(i);
    if (l < -1e-10) fail(ErrorCode::EigenFailure, "correlation matrix has a negative eigenvalue", stage);
    if (l < 0.0) l = 0.0;
  }
  const double total = basis.eigenvalues.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += basis.eigenvalues(i);
    if (acc / total >= threshold) {
      basis.retained = static_cast<std::size_t>(i + 1);
      break;
    }
  }
  if (basis.retained == 0) basis.retained = static_cast<std::size_t>(n);
  return basis;
}

Vector eole_coefficients(const EoleBasis& basis, std::span<const double> z) {
  const Eigen::Index n = basis.grid.rows();
  Vector cz(n);
  for (Eigen::Index j = 0; j < n; ++j) cz(j) = gaussian_correlation(z, row_span(basis.grid, j), basis.correlation_length);
  const auto M = static_cast<Eigen::Index>(basis.retained);
  Vector c = basis.eigenvectors.leftCols(M).transpose() * cz;
  for (Eigen::Index i = 0; i < M; ++i) c(i) /= std::sqrt(basis.eigenvalues(i));
  return c;
}

double eole_field_eval(const EoleBasis& basis, std::span<const double> xi, std::span<const double> z) {
  if (xi.size() != basis.retained)
    fail(ErrorCode::InvalidParameter, "expected " + std::to_string(basis.retained) + " standard normal variables",
         "benchmarks.eole_field_eval");
  const Vector c = eole_coefficients(basis, z);
  double g = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) g += xi[i] * c(static_cast<Eigen::Index>(i));
  return g;
}

LognormalField lognormal_field(double mean, double std) {
  const auto p = lognormal_params(mean, std / mean);
  return {p.lambda, p.zeta};
}

std::vector<std::string> benchmark_names() { return {"sobol-g", "beam", "truss", "eole-field"}; }

BenchmarkModel make_benchmark(const std::string& name, const BenchmarkOptions& options) {
  if (name == "sobol-g") {
    const auto c = sobol_g_constants();
    ExactReference ref;
    ref.mean = 1.0;
    ref.std = std::sqrt(sobol_g_variance(c));
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::size_t u[] = {i};
      ref.first.push_back(sobol_g_first(c, u));
      ref.total.push_back(sobol_g_total(c, u));
    }
    return {name, "Sobol g-function, 20 uniform inputs", "-", InputModel::iid(c.size(), Marginal::uniform(0.0, 1.0)),
            [c](std::span<const double> x) { return sobol_function(x, c); }, ref};
  }
  if (name == "beam") {
    auto input = beam_input();
    const auto mom = beam_exact_moments(input);
    const auto v = beam_exponent_variances(input);
    ExactReference ref{1e3 * mom.mean, 1e3 * mom.std, lognormal_product_first(v), lognormal_product_total(v)};
    return {name, "Simply supported beam midspan deflection", "mm", std::move(input),
            [](std::span<const double> x) { return 1e3 * beam_deflection(x[0], x[1], x[2], x[3], x[4]); }, ref};
  }
  if (name == "truss") {
    return {name, "23-bar truss midspan deflection", "cm", truss_input(),
            [](std::span<const double> x) { return 1e2 * truss_deflection(x); }, std::nullopt};
  }
  if (name == "eole-field") {
    const auto grid = square_grid(options.eole_grid, options.eole_grid, -0.5, 0.5, -0.5, 0.5);
    const auto basis = eole_basis(grid, options.eole_correlation_length, options.eole_threshold);
    const Vector c = eole_coefficients(basis, options.eole_point);
    const auto field = lognormal_field(1.0, 0.3);
    std::vector<double> v;
    for (Eigen::Index i = 0; i < c.size(); ++i) v.push_back(field.b * field.b * c(i) * c(i));
    double s = 0.0;
    for (double x : v) s += x;
    const double mean = std::exp(field.a + 0.5 * s);
    ExactReference ref{mean, mean * std::sqrt(std::expm1(s)), lognormal_product_first(v),
                       lognormal_product_total(v)};
    std::vector<NamedMarginal> m;
    for (std::size_t i = 1; i <= basis.retained; ++i) m.push_back({"xi" + std::to_string(i), Marginal::gaussian(0.0, 1.0)});
    return {name, "EOLE lognormal conductivity at a point", "W/(m K)", InputModel(std::move(m)),
            [c, field](std::span<const double> xi) {
              double g = 0.0;
              for (std::size_t i = 0; i < xi.size(); ++i) g += xi[i] * c(static_cast<Eigen::Index>(i));
              return std::exp(field.a + field.b * g);
            },
            ref};
  }
  fail(ErrorCode::ConfigError, "unknown benchmark '" + name + "' (expected sobol-g|beam|truss|eole-field)",
       "model.benchmark");
}

Vector evaluate_external(const std::string& command, const PointMatrix& physical) {
  constexpr const char* stage = "model.external";
  auto dir = std::filesystem::temp_directory_path();
  std::string path = (dir / "tensens-XXXXXX").string();
  const int fd = mkstemp(path.data());
  if (fd < 0) fail(ErrorCode::ModelFailure, "cannot create temporary input file", stage);
  close(fd);
  struct Cleanup {
    std::string p;
    ~Cleanup() { std::remove(p.c_str()); }
  } cleanup{path};
  {
    std::ofstream out(path);
    for (Eigen::Index j = 0; j < physical.cols(); ++j) out << (j ? "," : "") << 'x' << j + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < physical.rows(); ++i) {
      for (Eigen::Index j = 0; j < physical.cols(); ++j) out << (j ? "," : "") << format_double(physical(i, j));
      out << '\n';
    }
    if (!out) fail(ErrorCode::ModelFailure, "cannot write temporary input file", stage);
  }
  const std::string full = command + " < '" + path + "'";
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) fail(ErrorCode::ModelFailure, "cannot start '" + command + "'", stage);
  std::vector<double> values;
  std::string line;
  char buf[4096];
  bool parse_error = false;
  while (std::fgets(buf, sizeof buf, pipe)) {
    line += buf;
    if (line.empty() || line.back() != '\n') continue;
    std::istringstream is(line);
    double v;
    if (is >> v) values.push_back(v);
    else if (line.find_first_not_of(" \t\r\n") != std::string::npos) parse_error = true;
    line.clear();
  }
  if (!line.empty()) {
    std::istringstream is(line);
    double v;
    if (is >> v) values.push_back(v);
  }
  const int status = pclose(pipe);
  if (status != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : status;
    fail(ErrorCode::ModelFailure, "'" + command + "' exited with status " + std::to_string(code), stage);
  }
  if (parse_error) fail(ErrorCode::ModelFailure, "unparseable response line from '" + command + "'", stage);
  if (values.size() != static_cast<std::size_t>(physical.rows()))
    fail(ErrorCode::ModelFailure,
         "expected " + std::to_string(physical.rows()) + " responses, got " + std::to_string(values.size()), stage);
  Vector y(physical.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) = values[static_cast<std::size_t>(i)];
    if (!std::isfinite(y(i)))
      fail(ErrorCode::ModelFailure, "point " + std::to_string(i) + ": non-finite response", stage);
  }
  return y;
}

BatchEvaluator external_model(std::string command) {
  return [command = std::move(command)](const PointMatrix& x) { return evaluate_external(command, x); };
}

}  // namespace tensens
