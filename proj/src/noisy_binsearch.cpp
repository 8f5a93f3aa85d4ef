#include "psj/noisy_binsearch.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace psj {

std::string to_string(Acquisition a) {
  return a == Acquisition::kMutualInformation ? "mi" : "ei";
}

std::string to_string(StopReason r) { return r == StopReason::kEconomics ? "economics" : "cap"; }

void BinSearchConfig::validate() const {
  if (k < 1) throw InvalidInput("bin search: k must be >= 1");
  if (m < 1) throw InvalidInput("bin search: m must be >= 1");
  if (max_queries < k) throw InvalidInput("bin search: max_queries must be >= k");
  if (!(size.target_cos > 0.0 && size.target_cos < 1.0))
    throw InvalidInput("bin search: target cosine must lie in (0, 1)");
  if (!(size.beta > 0.0)) throw InvalidInput("bin search: beta must be > 0");
  if (!(mi_prune >= 0.0 && mi_prune < 1.0)) throw InvalidInput("bin search: mi_prune must lie in [0, 1)");
}

std::size_t pick_candidate(std::span<const double> scores, std::span<const double> xs,
                           double z_hat) {
  const double best = *std::max_element(scores.begin(), scores.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  std::size_t pick = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < best - tol) continue;
    if (pick == scores.size() || std::abs(xs[i] - z_hat) < std::abs(xs[pick] - z_hat)) pick = i;
  }
  return pick;
}

namespace {

// Candidates whose x lies inside the central 90% of the z marginal.
std::vector<std::size_t> central_band(const ParamGrid& grid) {
  const auto zm = grid.z_marginal();
  const auto& z = grid.axes().z;
  double cum = 0.0;
  double lo = z.front();
  double hi = z.back();
  bool lo_set = false;
  for (std::size_t i = 0; i < zm.size(); ++i) {
    cum += zm[i];
    if (!lo_set && cum >= 0.05) {
      lo = z[i];
      lo_set = true;
    }
    if (cum >= 0.95) {
      hi = z[i];
      break;
    }
  }
  std::vector<std::size_t> out;
  const auto& xs = grid.axes().x;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] >= lo && xs[i] <= hi) out.push_back(i);
  return out;
}

}  // namespace

BinSearchResult noisy_bin_search(Oracle& oracle, std::span<const double> a,
                                 std::span<const double> b, ParamGrid prior,
                                 const BinSearchConfig& cfg, const LikelihoodTable* table) {
  cfg.validate();
  if (a.size() != b.size()) throw InvalidInput("bin search endpoints differ in dimension");
  if (distance(a, b) == 0.0) throw InvalidInput("bin search endpoints coincide");

  std::unique_ptr<LikelihoodTable> own;
  if (table == nullptr) {
    own = std::make_unique<LikelihoodTable>(prior.axes());
    table = own.get();
  }
  if (table->cells() != prior.cell_count() || table->candidates() != prior.axes().x.size())
    throw InvalidInput("likelihood table does not match the prior's axes");

  BinSearchResult res{std::move(prior), {}, 0, StopReason::kCap, {}, 0};
  ParamGrid& grid = res.posterior;
  const auto& xs = grid.axes().x;
  const std::uint64_t start_count = oracle.query_count();
  Engine band_eng = make_engine(cfg.seed, 0xba4d);
  std::vector<double> scores(xs.size());
  SweepStats stats;
  std::int64_t issued = 0;

  auto finish = [&](StopReason why) {
    res.stop = why;
    res.estimates = mean_params(grid);
    res.queries = static_cast<std::int64_t>(oracle.query_count() - start_count);
    res.cell_visits = stats.cell_visits;
    return std::move(res);
  };

  while (issued < cfg.max_queries) {
    const double z_hat = mean_params(grid).z;
    std::vector<std::size_t> picks;
    if (cfg.m > 1 && cfg.band_sampling) {
      auto band = central_band(grid);
      if (band.empty()) band.push_back(pick_candidate(std::vector<double>(xs.size(), 0.0), xs, z_hat));
      std::uniform_int_distribution<std::size_t> pick(0, band.size() - 1);
      for (int j = 0; j < cfg.m; ++j) picks.push_back(band[pick(band_eng)]);
    } else {
      if (cfg.acquisition == Acquisition::kMutualInformation) {
        const auto w = grid.masses();
        const auto active = active_cells(w, cfg.mi_prune);
        mi_sweep(*table, w, active, scores, &stats);
      } else {
        for (std::size_t i = 0; i < xs.size(); ++i)
          scores[i] = -expected_improvement_score(grid, xs[i], cfg.size);
        stats.cell_visits += xs.size() * grid.cell_count();
      }
      picks.assign(static_cast<std::size_t>(cfg.m), pick_candidate(scores, xs, z_hat));
    }

    for (const std::size_t ix : picks) {
      const Label y = oracle.query(lerp(a, b, xs[ix]));
      grid.observe_candidate(*table, ix, y);
      ++issued;
      if (issued % cfg.k == 0) {
        const double n_i = expected_query_size(grid, mean_params(grid).z, cfg.size);
        res.n_history.push_back(n_i);
        const std::size_t h = res.n_history.size();
        if (h >= 2 && std::abs(n_i - res.n_history[h - 2]) <= cfg.k) return finish(StopReason::kEconomics);
      }
      if (issued >= cfg.max_queries) break;
    }
  }
  return finish(StopReason::kCap);
}

BisectionResult deterministic_bin_search(Oracle& oracle, std::span<const double> a,
                                         std::span<const double> b, double theta_rel,
                                         bool verify_start) {
  if (!(theta_rel > 0.0)) throw InvalidInput("bisection: theta must be > 0");
  if (a.size() != b.size()) throw InvalidInput("bisection endpoints differ in dimension");
  const std::uint64_t start_count = oracle.query_count();
  if (verify_start && oracle.query(a) != Label::kOther)
    throw InvalidBracket("bisection: start point is not adversarial");
  double lo = 0.0;  // adversarial side
  double hi = 1.0;  // attacked input
  while (hi - lo > theta_rel) {
    const double mid = 0.5 * (lo + hi);
    if (oracle.query(lerp(a, b, mid)) == Label::kOther) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return BisectionResult{lerp(a, b, lo), lo,
                         static_cast<std::int64_t>(oracle.query_count() - start_count)};
}

}  // namespace psj
