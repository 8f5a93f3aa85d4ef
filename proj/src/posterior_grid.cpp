#include "psj/posterior_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace psj {
namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = 0.5 * (lo + hi);
    return out;
  }
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

bool sorted_ascending(const std::vector<double>& v) {
  return std::is_sorted(v.begin(), v.end());
}

double cell_prob(double z, double s, double eps, double x) {
  return sigmoid_prob(SigmoidParams{z, s, eps}, x);
}

}  // namespace

void GridSpec::validate() const {
  auto fail = [](const std::string& why) { throw InvalidInput("invalid grid spec: " + why); };
  if (n_z < 1 || n_s < 1 || n_x < 1 || eps_values.empty()) fail("every axis needs at least one point");
  if (!(z_max >= z_min)) fail("z_max < z_min");
  if (!(log10_s_max >= log10_s_min)) fail("log10_s_max < log10_s_min");
  if (!sorted_ascending(eps_values)) fail("eps_values must be sorted ascending");
  for (double e : eps_values)
    if (!(e >= 0.0 && e <= 0.5)) fail("eps values must lie in [0, 1/2]");
}

GridAxes GridAxes::from_spec(const GridSpec& spec) {
  spec.validate();
  GridAxes a;
  a.z = linspace(spec.z_min, spec.z_max, spec.n_z);
  for (double l : linspace(spec.log10_s_min, spec.log10_s_max, spec.n_s)) a.s.push_back(std::pow(10.0, l));
  a.eps = spec.eps_values;
  a.x = linspace(spec.z_min, spec.z_max, spec.n_x);
  return a;
}

void GridAxes::validate() const {
  if (z.empty() || s.empty() || eps.empty() || x.empty())
    throw InvalidInput("invalid grid spec: empty axis");
  if (!sorted_ascending(z) || !sorted_ascending(s) || !sorted_ascending(eps) || !sorted_ascending(x))
    throw InvalidInput("invalid grid spec: axes must be sorted ascending");
  for (double v : s)
    if (!(v > 0.0)) throw InvalidInput("invalid grid spec: s values must be > 0");
  for (double e : eps)
    if (!(e >= 0.0 && e <= 0.5)) throw InvalidInput("invalid grid spec: eps values must lie in [0, 1/2]");
}

ParamGrid::ParamGrid(GridAxes axes) : axes_(std::move(axes)) {
  axes_.validate();
  const std::size_t n = axes_.z.size() * axes_.s.size() * axes_.eps.size();
  cz_.resize(n);
  cs_.resize(n);
  ce_.resize(n);
  for (std::size_t iz = 0; iz < axes_.z.size(); ++iz)
    for (std::size_t is = 0; is < axes_.s.size(); ++is)
      for (std::size_t ie = 0; ie < axes_.eps.size(); ++ie) {
        const std::size_t c = index(iz, is, ie);
        cz_[c] = axes_.z[iz];
        cs_[c] = axes_.s[is];
        ce_[c] = axes_.eps[ie];
      }
  log_mass_.assign(n, -std::log(static_cast<double>(n)));
}

std::vector<double> ParamGrid::masses() const {
  std::vector<double> out(log_mass_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_mass_[i]);
  return out;
}

std::vector<double> ParamGrid::z_marginal() const {
  std::vector<double> out(axes_.z.size(), 0.0);
  const std::size_t per_z = axes_.s.size() * axes_.eps.size();
  for (std::size_t c = 0; c < log_mass_.size(); ++c) out[c / per_z] += std::exp(log_mass_[c]);
  return out;
}

void ParamGrid::observe(double x, Label label) {
  const bool positive = label == Label::kTarget;
  for (std::size_t c = 0; c < log_mass_.size(); ++c) {
    const double p = cell_prob(cz_[c], cs_[c], ce_[c], x);
    log_mass_[c] += std::log(positive ? p : 1.0 - p);
  }
  try {
    renormalize("update");
  } catch (const DegeneratePosterior&) {
    throw DegeneratePosterior("posterior lost all mass after observing label " +
                              std::to_string(to_int(label)) + " at x=" + std::to_string(x));
  }
}

void ParamGrid::observe_candidate(const LikelihoodTable& table, std::size_t candidate,
                                  Label label) {
  if (table.cells() != log_mass_.size() || candidate >= table.candidates())
    throw InvalidInput("likelihood table does not match the grid");
  for (std::size_t c = 0; c < log_mass_.size(); ++c) log_mass_[c] += table.log_lik(c, candidate, label);
  try {
    renormalize("update");
  } catch (const DegeneratePosterior&) {
    throw DegeneratePosterior("posterior lost all mass after observing label " +
                              std::to_string(to_int(label)) + " at x=" +
                              std::to_string(axes_.x[candidate]));
  }
}

void ParamGrid::set_log_mass(std::vector<double> log_mass) {
  if (log_mass.size() != log_mass_.size()) throw InvalidInput("log mass has the wrong cell count");
  for (double v : log_mass)
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw InvalidInput("log mass entries must be finite or -inf");
  log_mass_ = std::move(log_mass);
  renormalize("set_log_mass");
}

void ParamGrid::renormalize(const char* context) {
  const double mx = *std::max_element(log_mass_.begin(), log_mass_.end());
  if (!std::isfinite(mx)) throw DegeneratePosterior(std::string("degenerate posterior in ") + context);
  double total = 0.0;
  for (double v : log_mass_) total += std::exp(v - mx);
  const double shift = mx + std::log(total);
  for (double& v : log_mass_) v -= shift;
}

ParamGrid init_uniform(const GridSpec& spec) { return ParamGrid(GridAxes::from_spec(spec)); }

ParamGrid update(ParamGrid grid, double x, Label label) {
  grid.observe(x, label);
  return grid;
}

SigmoidParams mean_params(const ParamGrid& grid) {
  double z = 0.0;
  double log_s = 0.0;
  double eps = 0.0;
  bool s_inf = false;
  const auto lm = grid.log_mass();
  for (std::size_t c = 0; c < lm.size(); ++c) {
    const double w = std::exp(lm[c]);
    if (w == 0.0) continue;
    z += w * grid.cell_z(c);
    eps += w * grid.cell_eps(c);
    if (std::isinf(grid.cell_s(c))) {
      s_inf = true;
    } else {
      log_s += w * std::log10(grid.cell_s(c));
    }
  }
  return SigmoidParams{z, s_inf ? kInf : std::pow(10.0, log_s), eps};
}

double binary_entropy_bits(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double mutual_information(const ParamGrid& grid, double x) {
  double q = 0.0;
  double h = 0.0;
  const auto lm = grid.log_mass();
  for (std::size_t c = 0; c < lm.size(); ++c) {
    const double w = std::exp(lm[c]);
    if (w == 0.0) continue;
    const double p = cell_prob(grid.cell_z(c), grid.cell_s(c), grid.cell_eps(c), x);
    q += w * p;
    h += w * binary_entropy_bits(p);
  }
  return std::max(0.0, binary_entropy_bits(q) - h);
}

double capped_sample_size(double delta, double s, double eps, const QuerySizeConfig& cfg) {
  if (cfg.target_cos <= 0.0) return 1.0;
  const double alpha = alpha_closed_form(delta, s, cfg.beta, eps);
  if (!(alpha > 0.0)) return cfg.n_max;
  const double n = sample_size_real(cfg.target_cos, cfg.dim, alpha);
  if (!(n < cfg.n_max)) return cfg.n_max;
  return std::min(cfg.n_max, static_cast<double>(sample_size(cfg.target_cos, cfg.dim, alpha)));
}

namespace {

double expected_size_weighted(const ParamGrid& grid, std::span<const double> w, double z_hat,
                              const QuerySizeConfig& cfg) {
  double total = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    if (w[c] == 0.0) continue;
    total += w[c] * capped_sample_size(grid.cell_z(c) - z_hat, grid.cell_s(c), grid.cell_eps(c), cfg);
  }
  return total;
}

}  // namespace

double expected_query_size(const ParamGrid& grid, double z_hat, const QuerySizeConfig& cfg) {
  if (cfg.mode == QuerySizeMode::kZMarginal) {
    const SigmoidParams point = mean_params(grid);
    const auto zm = grid.z_marginal();
    double total = 0.0;
    for (std::size_t iz = 0; iz < zm.size(); ++iz) {
      if (zm[iz] == 0.0) continue;
      total += zm[iz] * capped_sample_size(grid.axes().z[iz] - z_hat, point.s, point.eps, cfg);
    }
    return total;
  }
  const auto w = grid.masses();
  return expected_size_weighted(grid, w, z_hat, cfg);
}

double expected_improvement_score(const ParamGrid& grid, double x, const QuerySizeConfig& cfg) {
  const auto w = grid.masses();
  std::vector<double> pos(w.size());
  std::vector<double> neg(w.size());
  double p_pos = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double p = cell_prob(grid.cell_z(c), grid.cell_s(c), grid.cell_eps(c), x);
    pos[c] = w[c] * p;
    neg[c] = w[c] * (1.0 - p);
    p_pos += pos[c];
  }
  const double p_neg = 1.0 - p_pos;
  double score = 0.0;
  for (auto [branch, prob] : {std::pair{&pos, p_pos}, std::pair{&neg, p_neg}}) {
    if (prob <= 0.0) continue;
    double z_hat = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
      (*branch)[c] /= prob;
      z_hat += (*branch)[c] * grid.cell_z(c);
    }
    if (cfg.mode == QuerySizeMode::kZMarginal) {
      ParamGrid updated = update(grid, x, branch == &pos ? Label::kTarget : Label::kOther);
      score += prob * expected_query_size(updated, z_hat, cfg);
    } else {
      score += prob * expected_size_weighted(grid, *branch, z_hat, cfg);
    }
  }
  return score;
}

GridSpec shrink_spec(const GridSpec& spec, const SigmoidParams& center, double k) {
  if (!(k >= 1.0)) throw InvalidInput("shrink factor must be >= 1");
  auto shrink = [k](double lo, double hi, double c) {
    const double len = (hi - lo) / k;
    double a = c - 0.5 * len;
    double b = c + 0.5 * len;
    if (a < lo) {
      b += lo - a;
      a = lo;
    }
    if (b > hi) {
      a -= b - hi;
      b = hi;
    }
    return std::pair{std::max(a, lo), std::min(b, hi)};
  };
  GridSpec out = spec;
  std::tie(out.z_min, out.z_max) = shrink(spec.z_min, spec.z_max, center.z);
  const double log_s = std::isinf(center.s) ? spec.log10_s_max : std::log10(center.s);
  std::tie(out.log10_s_min, out.log10_s_max) = shrink(spec.log10_s_min, spec.log10_s_max, log_s);
  return out;
}

// ---------------------------------------------------------------------------

LikelihoodTable::LikelihoodTable(const GridAxes& axes)
    : n_x_(axes.x.size()), cells_(axes.z.size() * axes.s.size() * axes.eps.size()) {
  prob_.resize(cells_ * n_x_);
  ent_.resize(cells_ * n_x_);
  logp_.resize(cells_ * n_x_);
  logq_.resize(cells_ * n_x_);
  const std::size_t ns = axes.s.size();
  const std::size_t ne = axes.eps.size();
  const auto cells = static_cast<std::int64_t>(cells_);
#pragma omp parallel for schedule(static)
  for (std::int64_t ci = 0; ci < cells; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const double z = axes.z[c / (ns * ne)];
    const double s = axes.s[(c / ne) % ns];
    const double e = axes.eps[c % ne];
    for (std::size_t k = 0; k < n_x_; ++k) {
      const double p = cell_prob(z, s, e, axes.x[k]);
      prob_[c * n_x_ + k] = p;
      ent_[c * n_x_ + k] = binary_entropy_bits(p);
      logp_[c * n_x_ + k] = std::log(p);
      logq_[c * n_x_ + k] = std::log1p(-p);
    }
  }
}

std::vector<std::size_t> active_cells(std::span<const double> weights, double prune_rel) {
  const double mx = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
  const double cut = prune_rel * mx;
  std::vector<std::size_t> out;
  out.reserve(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c)
    if (weights[c] > 0.0 && weights[c] >= cut) out.push_back(c);
  return out;
}

namespace {

void sweep_range(const LikelihoodTable& table, std::span<const double> weights,
                 std::span<const std::size_t> active, std::size_t lo, std::size_t hi,
                 std::span<double> scores) {
  const std::size_t len = hi - lo;
  std::vector<double> q(len, 0.0);
  std::vector<double> h(len, 0.0);
  for (const std::size_t c : active) {
    const double w = weights[c];
    const double* p = table.prob_row(c) + lo;
    const double* e = table.entropy_row(c) + lo;
    for (std::size_t k = 0; k < len; ++k) {
      q[k] += w * p[k];
      h[k] += w * e[k];
    }
  }
  for (std::size_t k = 0; k < len; ++k)
    scores[lo + k] = std::max(0.0, binary_entropy_bits(q[k]) - h[k]);
}

}  // namespace

void mi_sweep_serial(const LikelihoodTable& table, std::span<const double> weights,
                     std::span<const std::size_t> active, std::span<double> scores,
                     SweepStats* stats) {
  sweep_range(table, weights, active, 0, table.candidates(), scores);
  if (stats != nullptr) stats->cell_visits += active.size() * table.candidates();
}

void mi_sweep(const LikelihoodTable& table, std::span<const double> weights,
              std::span<const std::size_t> active, std::span<double> scores, SweepStats* stats) {
  const std::size_t n = table.candidates();
#pragma omp parallel
  {
    std::size_t lo = 0;
    std::size_t hi = n;
#ifdef _OPENMP
    const auto threads = static_cast<std::size_t>(omp_get_num_threads());
    const auto me = static_cast<std::size_t>(omp_get_thread_num());
    lo = n * me / threads;
    hi = n * (me + 1) / threads;
#endif
    if (hi > lo) sweep_range(table, weights, active, lo, hi, scores);
  }
  if (stats != nullptr) stats->cell_visits += active.size() * n;
}

}  // namespace psj
