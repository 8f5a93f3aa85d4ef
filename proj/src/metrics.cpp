#include "psj/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace psj {

double scaled_distance(std::span<const double> x_star, std::span<const double> x) {
  return distance(x_star, x) / std::sqrt(static_cast<double>(x.size()));
}

BorderDistance border_distance(const Oracle& oracle, std::span<const double> x_star,
                               std::span<const double> x, const BorderSearch& search) {
  if (x.size() != x_star.size()) throw InvalidInput("border distance: dimension mismatch");
  const double raw = scaled_distance(x_star, x);
  if (raw == 0.0) throw InvalidInput("border distance: x coincides with x_star");
  auto f = [&](double u) { return oracle.probe(lerp(x_star, x, u)) - 0.5; };

  BorderDistance out;
  double u_prev = 0.0;
  double f_prev = f(0.0);
  bool found = false;
  double lo = 0.0;
  double hi = 0.0;
  for (int i = 1; i <= search.segments && !found; ++i) {
    const double u = search.u_max * i / search.segments;
    const double fu = f(u);
    if (fu == 0.0) {
      lo = hi = u;
      found = true;
    } else if ((f_prev < 0.0) != (fu < 0.0) && f_prev != 0.0) {
      lo = u_prev;
      hi = u;
      found = true;
    }
    u_prev = u;
    f_prev = fu;
  }
  for (double u = 2.0 * search.u_max; !found && u <= search.u_limit; u *= 2.0) {
    const double fu = f(u);
    if ((f_prev < 0.0) != (fu < 0.0) || fu == 0.0) {
      lo = u_prev;
      hi = u;
      found = true;
    }
    u_prev = u;
    f_prev = fu;
  }
  if (!found) {
    out.value = raw;
    out.projected.assign(x.begin(), x.end());
    return out;
  }
  const bool lo_negative = f(lo) < 0.0;
  while (hi - lo > search.tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0.0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // A grid point at exactly 1/2 (e.g. x on the boundary) is its own root.
  const double u = (lo == hi) ? lo : 0.5 * (lo + hi);
  out.u = u;
  out.projected = lerp(x_star, x, u);
  out.value = scaled_distance(x_star, out.projected);
  out.crossing_found = true;
  return out;
}

double adversarial_accuracy(std::span<const AccuracyItem> items, double eta) {
  if (!(eta >= 0.0)) throw InvalidInput("attack size must be >= 0");
  if (items.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& it : items)
    if (it.clean_correct && it.distance > eta) ++hit;
  return static_cast<double>(hit) / static_cast<double>(items.size());
}

double percentile(std::span<const double> values, double rank) {
  if (values.empty()) throw InvalidInput("percentile of an empty list");
  if (!(rank >= 0.0 && rank <= 100.0)) throw InvalidInput("percentile rank must lie in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1.0) * rank / 100.0;
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

std::array<double, 3> percentiles(std::span<const double> values) {
  return {percentile(values, 40.0), percentile(values, 50.0), percentile(values, 60.0)};
}

}  // namespace psj
