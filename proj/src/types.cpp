#include "psj/types.hpp"

#include <cmath>

namespace psj {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

PointVec lerp(std::span<const double> a, std::span<const double> b, double u) {
  PointVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - u) * a[i] + u * b[i];
  return out;
}

PointVec extend_from(std::span<const double> a, std::span<const double> b, double c) {
  PointVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c * (b[i] - a[i]);
  return out;
}

}  // namespace psj
