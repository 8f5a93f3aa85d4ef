#include "psj/sigmoid_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "psj/types.hpp"

namespace psj {
namespace {

constexpr std::int64_t kAlphaChunk = 1 << 16;
constexpr std::int64_t kCosChunk = 256;

// erf(a) - erf(b) for a >= b without cancellation in the tails.
double erf_diff(double a, double b) {
  if (b > 0.0) return std::erfc(b) - std::erfc(a);
  if (a < 0.0) return std::erfc(-a) - std::erfc(-b);
  return std::erf(a) - std::erf(b);
}

double label_prob(double t, double s, double eps, SigmoidShape shape) {
  double base;
  if (std::isinf(s)) {
    base = t > 0.0 ? 1.0 : (t < 0.0 ? 0.0 : 0.5);
  } else {
    base = unit_sigmoid(s * t, shape);
  }
  return eps + (1.0 - 2.0 * eps) * base;
}

struct Partial {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t count = 0;
};

Partial alpha_chunk(double delta, double s, double beta, double eps, std::int64_t count,
                    std::uint64_t seed, std::int64_t chunk, SigmoidShape shape) {
  Engine eng = make_engine(seed, static_cast<std::uint64_t>(chunk));
  std::normal_distribution<double> normal(0.0, 1.0);
  Partial p;
  for (std::int64_t i = 0; i < count; ++i) {
    const double d = normal(eng);
    const double prob = label_prob(delta + beta * d, s, eps, shape);
    const double y = uniform01(eng) < prob ? 1.0 : -1.0;
    const double v = y * d;
    p.sum += v;
    p.sum_sq += v * v;
  }
  p.count = count;
  return p;
}

McEstimate reduce(const std::vector<Partial>& parts) {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t n = 0;
  for (const auto& p : parts) {
    sum += p.sum;
    sum_sq += p.sum_sq;
    n += p.count;
  }
  McEstimate out;
  if (n == 0) return out;
  out.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - sum * out.mean) / static_cast<double>(n - 1));
    out.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

void check_samples(std::int64_t m) {
  if (m < 1) throw InvalidInput("sample count must be >= 1, got " + std::to_string(m));
}

Partial cos_chunk(int n, int d, double s, double delta, double beta, double eps,
                  std::int64_t count, std::uint64_t seed, std::int64_t chunk,
                  SigmoidShape shape) {
  Engine eng = make_engine(seed, static_cast<std::uint64_t>(chunk));
  Partial p;
  for (std::int64_t i = 0; i < count; ++i) {
    const double c = random_cos_draw(n, d, s, delta, beta, eps, eng, shape);
    p.sum += c;
    p.sum_sq += c * c;
  }
  p.count = count;
  return p;
}

}  // namespace

void SigmoidParams::validate() const {
  if (!(s > 0.0)) throw InvalidInput("sigmoid inverse scale must be > 0");
  if (!(eps >= 0.0 && eps <= 0.5)) throw InvalidInput("sigmoid noise floor must lie in [0, 1/2]");
}

double unit_sigmoid(double t, SigmoidShape shape) {
  if (shape == SigmoidShape::kClippedLinear) return std::clamp(t + 0.5, 0.0, 1.0);
  return 1.0 / (1.0 + std::exp(-4.0 * t));
}

double sigmoid_prob(const SigmoidParams& p, double x, SigmoidShape shape) {
  if (x == p.z) return 0.5;
  return label_prob(x - p.z, p.s, p.eps, shape);
}

double alpha_clipped(double delta, double s, double beta, double eps) {
  const double half_width = 0.5 / s;
  const double scale = beta * std::numbers::sqrt2;
  return (1.0 - 2.0 * eps) * s * beta *
         erf_diff((delta + half_width) / scale, (delta - half_width) / scale);
}

double alpha_deterministic(double delta, double beta, double eps) {
  const double r = delta / beta;
  return (1.0 - 2.0 * eps) * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * r * r);
}

double alpha_closed_form(double delta, double s, double beta, double eps) {
  return std::isinf(s) ? alpha_deterministic(delta, beta, eps)
                       : alpha_clipped(delta, s, beta, eps);
}

McEstimate alpha_mc(double delta, double s, double beta, double eps, std::int64_t samples,
                    std::uint64_t seed, SigmoidShape shape) {
  check_samples(samples);
  const std::int64_t chunks = (samples + kAlphaChunk - 1) / kAlphaChunk;
  std::vector<Partial> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t count = std::min(kAlphaChunk, samples - c * kAlphaChunk);
    parts[static_cast<std::size_t>(c)] =
        alpha_chunk(delta, s, beta, eps, count, seed, c, shape);
  }
  return reduce(parts);
}

McEstimate alpha_mc_serial(double delta, double s, double beta, double eps,
                           std::int64_t samples, std::uint64_t seed, SigmoidShape shape) {
  check_samples(samples);
  std::vector<Partial> parts;
  for (std::int64_t c = 0; c * kAlphaChunk < samples; ++c) {
    const std::int64_t count = std::min(kAlphaChunk, samples - c * kAlphaChunk);
    parts.push_back(alpha_chunk(delta, s, beta, eps, count, seed, c, shape));
  }
  return reduce(parts);
}

double expected_cos(double n, int d, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("expected_cos: alpha must be > 0 (no signal)");
  if (!(n > 0.0)) throw DomainError("expected_cos: sample count must be > 0");
  if (d < 1) throw DomainError("expected_cos: dimension must be >= 1");
  return 1.0 / std::sqrt(1.0 + (d - 1) / (n * alpha * alpha));
}

double sample_size_real(double target_cos, int d, double alpha) {
  if (!(target_cos < 1.0)) throw DomainError("sample_size: target cosine must be < 1 (unbounded)");
  if (target_cos < 0.0) throw DomainError("sample_size: target cosine must be >= 0");
  if (!(alpha > 0.0)) throw DomainError("sample_size: alpha must be > 0 (no signal)");
  const double c2 = target_cos * target_cos;
  return c2 / (alpha * alpha) * (d - 1) / (1.0 - c2);
}

std::int64_t sample_size(double target_cos, int d, double alpha) {
  const double n = sample_size_real(target_cos, d, alpha);
  if (!(n < 9.0e15)) throw DomainError("sample_size: required sample size is not representable");
  const double nearest = std::round(n);
  const double snapped = std::abs(n - nearest) <= 1e-9 * std::max(1.0, n) ? nearest : std::ceil(n);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(snapped));
}

double random_cos_draw(int n, int d, double s, double delta, double beta, double eps,
                       Engine& eng, SigmoidShape shape) {
  if (n < 1) throw InvalidInput("random_cos_draw: n must be >= 1");
  if (d < 1) throw InvalidInput("random_cos_draw: d must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  double xi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dl = normal(eng);
    const double prob = label_prob(delta + beta * dl, s, eps, shape);
    xi += (uniform01(eng) < prob ? dl : -dl);
  }
  xi /= n;
  double chi2 = 0.0;
  if (d > 1) chi2 = std::chi_squared_distribution<double>(d - 1)(eng);
  const double denom = std::sqrt(xi * xi + chi2 / n);
  return denom > 0.0 ? xi / denom : 0.0;
}

double random_cos_draw(int n, int d, double s, double delta, double beta, double eps,
                       std::uint64_t seed, SigmoidShape shape) {
  Engine eng = make_engine(seed);
  return random_cos_draw(n, d, s, delta, beta, eps, eng, shape);
}

McEstimate mean_random_cos(int n, int d, double s, double delta, double beta, double eps,
                           std::int64_t draws, std::uint64_t seed, SigmoidShape shape) {
  check_samples(draws);
  const std::int64_t chunks = (draws + kCosChunk - 1) / kCosChunk;
  std::vector<Partial> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t count = std::min(kCosChunk, draws - c * kCosChunk);
    parts[static_cast<std::size_t>(c)] =
        cos_chunk(n, d, s, delta, beta, eps, count, seed, c, shape);
  }
  return reduce(parts);
}

McEstimate mean_random_cos_serial(int n, int d, double s, double delta, double beta,
                                  double eps, std::int64_t draws, std::uint64_t seed,
                                  SigmoidShape shape) {
  check_samples(draws);
  std::vector<Partial> parts;
  for (std::int64_t c = 0; c * kCosChunk < draws; ++c) {
    const std::int64_t count = std::min(kCosChunk, draws - c * kCosChunk);
    parts.push_back(cos_chunk(n, d, s, delta, beta, eps, count, seed, c, shape));
  }
  return reduce(parts);
}

}  // namespace psj
