#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "surfield/error.hpp"
#include "surfield/inference.hpp"

namespace surfield {

FieldType FieldType::student_t(double nu) {
  if (!(nu >= 1.0)) throw InvalidArgument("FieldType: t degrees of freedom must be at least 1");
  FieldType t;
  t.kind = Kind::student_t;
  t.nu = nu;
  return t;
}

std::string FieldType::name() const {
  if (kind == Kind::gaussian) return "gaussian";
  return "t(" + std::to_string(static_cast<long long>(std::llround(nu))) + ")";
}

double ec_density(const FieldType& type, int d, double u) {
  if (d < 0 || d > 3) throw InvalidArgument("ec_density: only d = 0..3 are supported");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (type.kind == FieldType::Kind::gaussian) {
    const double e = std::exp(-0.5 * u * u);
    switch (d) {
      case 0:
        return 0.5 * std::erfc(u / std::numbers::sqrt2);
      case 1:
        return e / two_pi;
      case 2:
        return u * e / std::pow(two_pi, 1.5);
      default:
        return (u * u - 1.0) * e / (two_pi * two_pi);
    }
  }
  const double nu = type.nu;
  if (!(nu >= 1.0)) throw InvalidArgument("ec_density: t degrees of freedom must be at least 1");
  if (d == 0) {
    const boost::math::students_t_distribution<double> dist(nu);
    return boost::math::cdf(boost::math::complement(dist, u));
  }
  const double base = std::pow(1.0 + u * u / nu, -0.5 * (nu - 1.0));
  switch (d) {
    case 1:
      return base / two_pi;
    case 2: {
      const double g = std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) / std::sqrt(0.5 * nu);
      return g * u * base / std::pow(two_pi, 1.5);
    }
    default:
      return ((nu - 1.0) / nu * u * u - 1.0) * base / (two_pi * two_pi);
  }
}

double expected_ec(const LkcVector& lkc, const FieldType& type, double u) {
  double s = 0.0;
  for (int d = 0; d <= lkc.dim; ++d) {
    if (lkc.L[d] != 0.0) s += lkc.L[d] * ec_density(type, d, u);
  }
  return s;
}

double threshold(const LkcVector& lkc, const FieldType& type, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("threshold: alpha must lie in (0, 1)");
  constexpr double kTop = 50.0;
  constexpr double kFloor = -10.0;
  constexpr double kStep = 0.01;
  auto eec = [&](double u) { return expected_ec(lkc, type, u); };

  // walk down from the top until the expected EC reaches 1
  const int steps = static_cast<int>(std::lround((kTop - kFloor) / kStep));
  std::vector<double> us;
  std::vector<double> vals;
  for (int i = 0; i <= steps; ++i) {
    const double u = kTop - i * kStep;
    us.push_back(u);
    vals.push_back(eec(u));
    if (vals.back() >= 1.0) break;
  }
  const double u_min = us.back();
  for (std::size_t i = 1; i < vals.size(); ++i) {
    // values are sampled from the top down, so they must not decrease
    if (vals[i] < vals[i - 1] - 1e-12 * std::max(1.0, std::abs(vals[i - 1]))) {
      throw NoRootError("threshold: expected EC is not decreasing on [" + std::to_string(u_min) + ", 50]");
    }
  }
  if (vals.back() < alpha) {
    throw NoRootError("threshold: expected EC stays below alpha = " + std::to_string(alpha) +
                      " on the bracket; alpha is too large for these LKCs");
  }
  if (vals.front() > alpha) throw NoRootError("threshold: expected EC exceeds alpha at u = 50");
  std::size_t i = 0;
  while (vals[i] < alpha) ++i;
  if (vals[i] == alpha) return us[i];
  double lo = us[i];      // eec(lo) >= alpha
  double hi = us[i - 1];  // eec(hi) < alpha
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (eec(mid) >= alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace surfield
