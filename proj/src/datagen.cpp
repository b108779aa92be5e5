#include "neurocpd/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "neurocpd/error.hpp"
#include "neurocpd/simd/kernels.hpp"
#include "neurocpd/tensor_io.hpp"

namespace neurocpd {
namespace {

constexpr int kMaxBisection = 200;
constexpr std::uint64_t kProblemStream = 0x70726f62;  // "prob"
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;    // "nois"

struct MuExtent {
  double min = 1.0;
  double max = -1.0;
};

MuExtent off_diagonal_extent(const Matrix& m) {
  const Matrix mu = collinearity(m);
  MuExtent e;
  for (std::size_t j = 0; j < mu.cols(); ++j)
    for (std::size_t i = j + 1; i < mu.rows(); ++i) {
      e.min = std::min(e.min, mu(i, j));
      e.max = std::max(e.max, mu(i, j));
    }
  if (mu.cols() < 2) e = {0.0, 0.0};
  return e;
}

std::size_t parse_size(std::string_view s, const std::string& kind) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v == 0)
    throw DomainError("unknown problem kind '" + kind + "'");
  return v;
}

struct KindSpec {
  std::vector<std::size_t> shape;
  std::size_t rank = 0;
  std::vector<std::optional<MuRange>> mu;
};

KindSpec parse_kind(const std::string& kind) {
  constexpr MuRange low{0.4, 0.6};
  constexpr MuRange high{0.96, 0.99};
  if (kind == "difficult9") return {{9, 9, 9}, 10, {}};
  if (kind.rfind("difficult9_R", 0) == 0) {
    const std::size_t r = parse_size(std::string_view(kind).substr(12), kind);
    if (r < 11 || r > 16) throw DomainError("unknown problem kind '" + kind + "'");
    return {{9, 9, 9}, r, {}};
  }
  if (kind == "medium70") return {{70, 70, 70}, 75, {}};
  if (kind == "caseI") return {{20, 20, 20}, 10, {low, low, high}};
  if (kind == "caseII") return {{20, 20, 20}, 10, {low, high, high}};
  if (kind.rfind("lowrank:", 0) == 0) {
    const std::string_view rest = std::string_view(kind).substr(8);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw DomainError("unknown problem kind '" + kind + "'");
    KindSpec spec;
    spec.rank = parse_size(rest.substr(colon + 1), kind);
    std::string_view dims = rest.substr(0, colon);
    while (!dims.empty()) {
      const auto x = dims.find('x');
      spec.shape.push_back(parse_size(dims.substr(0, x), kind));
      dims = x == std::string_view::npos ? std::string_view() : dims.substr(x + 1);
    }
    return spec;
  }
  throw DomainError("unknown problem kind '" + kind + "'");
}

std::string range_text(const MuRange& r) { return format_double(r.lo) + "," + format_double(r.hi); }

}  // namespace

Matrix collinearity(const Matrix& m) {
  const auto& k = simd::active();
  const std::size_t r = m.cols();
  std::vector<double> norms(r);
  for (std::size_t j = 0; j < r; ++j) {
    norms[j] = std::sqrt(k.sum_sq(m.col(j)));
    if (norms[j] == 0.0) throw DomainError("collinearity: column " + std::to_string(j) + " is zero");
  }
  Matrix mu(r, r);
  for (std::size_t j = 0; j < r; ++j) {
    mu(j, j) = 1.0;
    for (std::size_t i = j + 1; i < r; ++i) {
      const double v = std::clamp(k.dot(m.col(i), m.col(j)) / (norms[i] * norms[j]), -1.0, 1.0);
      mu(i, j) = v;
      mu(j, i) = v;
    }
  }
  return mu;
}

bool collinearity_within(const Matrix& m, MuRange range) {
  if (m.cols() < 2) return true;
  const MuExtent e = off_diagonal_extent(m);
  return range.contains(e.min) && range.contains(e.max);
}

Matrix gen_collinear_factor(std::size_t dim, std::size_t rank, MuRange range, Rng& rng) {
  if (dim == 0 || rank == 0) throw ShapeError("gen_collinear_factor: empty shape");
  if (!(range.lo >= 0.0 && range.lo <= range.hi && range.hi <= 1.0))
    throw DomainError("gen_collinear_factor: need 0 <= lo <= hi <= 1");
  const std::size_t support = std::max<std::size_t>(1, dim / rank);

  int budget = kMaxBisection;
  while (budget > 0) {
    Matrix w(dim, 1);
    for (double& v : w.data()) v = uniform(rng, 0.5, 1.0);
    std::vector<std::size_t> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix u(dim, rank);
    for (std::size_t r = 0; r < rank; ++r)
      for (std::size_t s = 0; s < support; ++s) u(perm[(r * support + s) % dim], r) = uniform(rng, 0.5, 1.0);

    // Larger eta separates the columns (lower mu); eta -> 0 makes them equal to w.
    double eta_lo = 0.0;
    double eta_hi = -1.0;  // unknown upper end: grow geometrically
    double eta = 1.0;
    while (budget-- > 0) {
      Matrix m(dim, rank);
      for (std::size_t r = 0; r < rank; ++r)
        for (std::size_t i = 0; i < dim; ++i) m(i, r) = w(i, 0) + eta * u(i, r);
      const MuExtent e = off_diagonal_extent(m);
      const bool too_high = e.max > range.hi;
      const bool too_low = e.min < range.lo;
      if (!too_high && !too_low) return m;
      if (too_high && too_low) break;  // spread wider than the range: redraw
      if (too_high)
        eta_lo = eta;
      else
        eta_hi = eta;
      eta = eta_hi < 0.0 ? 2.0 * eta : 0.5 * (eta_lo + eta_hi);
    }
  }
  throw InfeasibleError("gen_collinear_factor: no factor with collinearity in [" +
                        format_double(range.lo) + ", " + format_double(range.hi) + "] after " +
                        std::to_string(kMaxBisection) + " bisection steps");
}

Matrix gen_collinear_factor(std::size_t dim, std::size_t rank, MuRange range, std::uint64_t seed) {
  Rng rng = make_rng(seed, kProblemStream, 1);
  return gen_collinear_factor(dim, rank, range, rng);
}

Problem gen_problem(const std::string& kind, std::uint64_t seed, std::optional<double> snr_db) {
  const KindSpec spec = parse_kind(kind);
  Problem p;
  p.kind = kind;
  p.seed = seed;
  p.snr_db = snr_db;
  p.mu_ranges = spec.mu;
  p.mu_ranges.resize(spec.shape.size());

  Rng rng = make_rng(seed, kProblemStream);
  std::vector<Matrix> factors;
  for (std::size_t n = 0; n < spec.shape.size(); ++n) {
    if (p.mu_ranges[n])
      factors.push_back(gen_collinear_factor(spec.shape[n], spec.rank, *p.mu_ranges[n], rng));
    else
      factors.push_back(uniform_matrix(spec.shape[n], spec.rank, rng));
  }
  p.truth = KruskalModel(std::move(factors));
  p.tensor = kruskal_full(p.truth);

  if (snr_db) {
    Rng noise_rng = make_rng(seed, kNoiseStream);
    std::vector<double> noise(p.tensor.size());
    for (double& v : noise) v = uniform(noise_rng, -1.0, 1.0);
    const auto& k = simd::active();
    const double signal_sq = k.sum_sq(p.tensor.data());
    const double noise_sq = k.sum_sq(noise);
    const double scale = noise_sq > 0.0 ? std::sqrt(signal_sq / noise_sq * std::pow(10.0, -*snr_db / 10.0)) : 0.0;
    auto data = p.tensor.data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::max(0.0, data[i] + scale * noise[i]);
  }
  return p;
}

std::map<std::string, std::string> problem_metadata(const Problem& p) {
  std::map<std::string, std::string> meta;
  meta["kind"] = p.kind;
  meta["seed"] = std::to_string(p.seed);
  std::string shape;
  for (std::size_t d : p.tensor.shape()) shape += (shape.empty() ? "" : "x") + std::to_string(d);
  meta["shape"] = shape;
  meta["rank"] = std::to_string(p.truth.rank());
  meta["snr_db"] = p.snr_db ? format_double(*p.snr_db) : "none";
  for (std::size_t n = 0; n < p.mu_ranges.size(); ++n)
    meta["mu_range_" + std::to_string(n)] = p.mu_ranges[n] ? range_text(*p.mu_ranges[n]) : "uniform";
  return meta;
}

void save_problem(const std::filesystem::path& path, const Problem& p) {
  save_tensor(path, p.tensor);
  auto truth = path;
  truth += ".truth";
  save_model(truth, p.truth);
  auto meta = path;
  meta += ".meta";
  save_key_values(meta, problem_metadata(p));
}

KruskalModel random_init(const DenseTensor& t, std::size_t rank, Rng& rng) {
  if (rank == 0) throw ShapeError("random_init: rank must be positive");
  std::vector<Matrix> factors;
  for (std::size_t d : t.shape()) factors.push_back(uniform_matrix(d, rank, rng));
  KruskalModel m(std::move(factors));
  const double target = frobenius_norm(t);
  const double current = frobenius_norm(kruskal_full(m));
  if (target > 0.0 && current > 0.0) {
    const double scale = std::pow(target / current, 1.0 / static_cast<double>(m.order()));
    for (auto& f : m.factors())
      for (double& v : f.data()) v *= scale;
  }
  return m;
}

}  // namespace neurocpd
