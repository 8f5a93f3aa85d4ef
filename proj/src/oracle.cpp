#include "psj/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psj {

Oracle::Oracle(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidInput("oracle dimension must be >= 1");
}

void Oracle::check_dim(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw InvalidInput("dimension mismatch: oracle expects " + std::to_string(dim_) +
                       ", got " + std::to_string(x.size()));
  }
}

Label Oracle::query(std::span<const double> x) {
  check_dim(x);
  std::lock_guard lock(mu_);
  const Label out = do_query(x);
  count_.fetch_add(unit_cost());
  return out;
}

std::vector<Label> Oracle::query_batch(std::span<const PointVec> xs) {
  std::vector<Label> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(query(x));
  return out;
}

double Oracle::probe(std::span<const double> x) const {
  if (!has_probe()) throw ProbeAbsent("oracle exposes no probability probe");
  check_dim(x);
  return do_probe(x);
}

double Oracle::do_probe(std::span<const double>) const {
  throw ProbeAbsent("oracle exposes no probability probe");
}

// ---------------------------------------------------------------------------

PlanarSigmoidOracle::PlanarSigmoidOracle(PlanarSigmoidSpec spec, std::uint64_t seed)
    : Oracle(static_cast<int>(spec.normal.size())), spec_(std::move(spec)), eng_(make_engine(seed)) {
  if (spec_.on_plane.size() != spec_.normal.size())
    throw InvalidInput("planar oracle: normal and plane point differ in dimension");
  if (std::abs(norm2(spec_.normal) - 1.0) > 1e-12)
    throw InvalidInput("planar oracle: boundary normal must be a unit vector");
  SigmoidParams{0.0, spec_.s, spec_.eps}.validate();
}

double PlanarSigmoidOracle::offset(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - spec_.on_plane[i]) * spec_.normal[i];
  return acc;
}

double PlanarSigmoidOracle::do_probe(std::span<const double> x) const {
  return sigmoid_prob(SigmoidParams{0.0, spec_.s, spec_.eps}, offset(x));
}

Label PlanarSigmoidOracle::do_query(std::span<const double> x) {
  return uniform01(eng_) < do_probe(x) ? Label::kTarget : Label::kOther;
}

// ---------------------------------------------------------------------------

LinearLogitOracle::LinearLogitOracle(LinearLogitSpec spec, std::uint64_t seed)
    : Oracle(spec.dim), spec_(std::move(spec)), eng_(make_engine(seed)) {
  const auto k = static_cast<std::size_t>(spec_.classes);
  if (spec_.classes < 2) throw InvalidInput("linear oracle needs at least 2 classes");
  if (spec_.weights.size() != k * static_cast<std::size_t>(spec_.dim) || spec_.biases.size() != k)
    throw InvalidInput("linear oracle: weight/bias shapes do not match classes x dim");
  if (spec_.target_class < 0 || spec_.target_class >= spec_.classes)
    throw InvalidInput("linear oracle: target class out of range");
  if (!(spec_.temperature >= 0.0)) throw InvalidInput("linear oracle: temperature must be >= 0");
}

std::vector<double> LinearLogitOracle::logits(std::span<const double> x) const {
  std::vector<double> out(spec_.biases);
  const auto d = static_cast<std::size_t>(spec_.dim);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* row = spec_.weights.data() + k * d;
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += row[i] * x[i];
    out[k] += acc;
  }
  return out;
}

double LinearLogitOracle::target_prob_from_logits(std::span<const double> l) const {
  const auto c = static_cast<std::size_t>(spec_.target_class);
  if (spec_.temperature == 0.0) {
    const auto best = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
    return best == c ? 1.0 : 0.0;
  }
  const double mx = *std::max_element(l.begin(), l.end());
  double total = 0.0;
  for (double v : l) total += std::exp((v - mx) / spec_.temperature);
  return std::exp((l[c] - mx) / spec_.temperature) / total;
}

int LinearLogitOracle::argmax_class(std::span<const double> x) const {
  const auto l = logits(x);
  return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

double LinearLogitOracle::do_probe(std::span<const double> x) const {
  return target_prob_from_logits(logits(x));
}

Label LinearLogitOracle::do_query(std::span<const double> x) {
  const auto l = logits(x);
  int cls;
  if (spec_.temperature == 0.0) {
    cls = static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
  } else {
    const double mx = *std::max_element(l.begin(), l.end());
    std::vector<double> w(l.size());
    for (std::size_t k = 0; k < l.size(); ++k) w[k] = std::exp((l[k] - mx) / spec_.temperature);
    cls = std::discrete_distribution<int>(w.begin(), w.end())(eng_);
  }
  return cls == spec_.target_class ? Label::kTarget : Label::kOther;
}

// ---------------------------------------------------------------------------

FlipNoiseOracle::FlipNoiseOracle(OraclePtr base, double nu, int classes, std::uint64_t seed)
    : Oracle(base->dim()), base_(std::move(base)), nu_(nu), classes_(classes), eng_(make_engine(seed)) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw InvalidInput("flip probability must lie in [0, 1]");
  if (classes < 2) throw InvalidInput("flip noise needs at least 2 classes");
}

Label FlipNoiseOracle::do_query(std::span<const double> x) {
  const Label b = base_->query(x);
  const double u = uniform01(eng_);
  if (b == Label::kTarget) return u < nu_ ? Label::kOther : Label::kTarget;
  return u < nu_ / (classes_ - 1) ? Label::kTarget : Label::kOther;
}

double FlipNoiseOracle::do_probe(std::span<const double> x) const {
  const double p = base_->probe(x);
  return (1.0 - nu_) * p + (1.0 - p) * nu_ / (classes_ - 1);
}

// ---------------------------------------------------------------------------

InputNoiseOracle::InputNoiseOracle(OraclePtr base, double sigma, std::uint64_t seed,
                                   int probe_draws)
    : Oracle(base->dim()), base_(std::move(base)), sigma_(sigma), eng_(make_engine(seed)),
      draws_(probe_draws) {
  if (!(sigma >= 0.0)) throw InvalidInput("input noise deviation must be >= 0");
  if (!base_->has_probe() || sigma_ == 0.0) return;
  Engine bank_eng = make_engine(seed, 0x9b0be);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (const auto* lin = dynamic_cast<const LinearLogitOracle*>(base_.get())) {
    // W n with n ~ N(0, I_d) is N(0, W W^T); sample it through the Cholesky
    // factor of the K x K Gram matrix.
    const auto& sp = lin->spec();
    const auto k = static_cast<std::size_t>(sp.classes);
    const auto d = static_cast<std::size_t>(sp.dim);
    std::vector<double> gram(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += sp.weights[a * d + i] * sp.weights[b * d + i];
        gram[a * k + b] = gram[b * k + a] = acc;
      }
    std::vector<double> chol(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        double acc = gram[a * k + b];
        for (std::size_t j = 0; j < b; ++j) acc -= chol[a * k + j] * chol[b * k + j];
        if (a == b) {
          chol[a * k + a] = std::sqrt(std::max(acc, 0.0));
        } else {
          chol[a * k + b] = chol[b * k + b] > 0.0 ? acc / chol[b * k + b] : 0.0;
        }
      }
    logit_bank_.resize(static_cast<std::size_t>(draws_) * k);
    std::vector<double> eta(k);
    for (int j = 0; j < draws_; ++j) {
      for (auto& e : eta) e = normal(bank_eng);
      for (std::size_t a = 0; a < k; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b <= a; ++b) acc += chol[a * k + b] * eta[b];
        logit_bank_[static_cast<std::size_t>(j) * k + a] = sigma_ * acc;
      }
    }
  } else if (dynamic_cast<const PlanarSigmoidOracle*>(base_.get()) != nullptr) {
    offset_bank_.resize(static_cast<std::size_t>(draws_));
    for (auto& v : offset_bank_) v = sigma_ * normal(bank_eng);
  } else {
    draws_ = std::min(draws_, 256);
    generic_bank_.resize(static_cast<std::size_t>(draws_) * static_cast<std::size_t>(dim()));
    for (auto& v : generic_bank_) v = sigma_ * normal(bank_eng);
  }
}

Label InputNoiseOracle::do_query(std::span<const double> x) {
  if (sigma_ == 0.0) return base_->query(x);
  std::normal_distribution<double> normal(0.0, sigma_);
  PointVec noisy(x.begin(), x.end());
  for (auto& v : noisy) v += normal(eng_);
  return base_->query(noisy);
}

double InputNoiseOracle::do_probe(std::span<const double> x) const {
  if (sigma_ == 0.0) return base_->probe(x);
  double acc = 0.0;
  if (!logit_bank_.empty()) {
    const auto* lin = static_cast<const LinearLogitOracle*>(base_.get());
    const auto center = lin->logits(x);
    const std::size_t k = center.size();
    std::vector<double> l(k);
    for (int j = 0; j < draws_; ++j) {
      for (std::size_t a = 0; a < k; ++a)
        l[a] = center[a] + logit_bank_[static_cast<std::size_t>(j) * k + a];
      acc += lin->target_prob_from_logits(l);
    }
  } else if (!offset_bank_.empty()) {
    const auto* planar = static_cast<const PlanarSigmoidOracle*>(base_.get());
    const double off = planar->offset(x);
    const SigmoidParams sp{0.0, planar->spec().s, planar->spec().eps};
    for (double v : offset_bank_) acc += sigmoid_prob(sp, off + v);
  } else {
    const auto d = static_cast<std::size_t>(dim());
    PointVec shifted(d);
    for (int j = 0; j < draws_; ++j) {
      for (std::size_t i = 0; i < d; ++i)
        shifted[i] = x[i] + generic_bank_[static_cast<std::size_t>(j) * d + i];
      acc += base_->probe(shifted);
    }
  }
  return acc / draws_;
}

// ---------------------------------------------------------------------------

RepeatMajorityOracle::RepeatMajorityOracle(OraclePtr base, int repeats)
    : Oracle(base->dim()), base_(std::move(base)), repeats_(repeats) {
  if (repeats < 1 || repeats % 2 == 0)
    throw InvalidInput("majority vote needs an odd repetition count >= 1, got " +
                       std::to_string(repeats));
}

Label RepeatMajorityOracle::do_query(std::span<const double> x) {
  int votes = 0;
  for (int i = 0; i < repeats_; ++i) votes += to_int(base_->query(x));
  return votes > 0 ? Label::kTarget : Label::kOther;
}

double RepeatMajorityOracle::do_probe(std::span<const double> x) const {
  return majority_prob(base_->probe(x), repeats_);
}

double majority_prob(double p, int repeats) {
  // Sum of binomial tail terms, built up multiplicatively.
  double total = 0.0;
  const int need = repeats / 2 + 1;
  for (int k = need; k <= repeats; ++k) {
    double coef = 1.0;
    for (int j = 1; j <= k; ++j) coef = coef * (repeats - k + j) / j;
    total += coef * std::pow(p, k) * std::pow(1.0 - p, repeats - k);
  }
  return total;
}

OraclePtr wrap_flip(OraclePtr base, double nu, int classes, std::uint64_t seed) {
  return std::make_shared<FlipNoiseOracle>(std::move(base), nu, classes, seed);
}

OraclePtr wrap_input_noise(OraclePtr base, double sigma, std::uint64_t seed) {
  return std::make_shared<InputNoiseOracle>(std::move(base), sigma, seed);
}

OraclePtr wrap_repeat_majority(OraclePtr base, int repeats) {
  return std::make_shared<RepeatMajorityOracle>(std::move(base), repeats);
}

}  // namespace psj
