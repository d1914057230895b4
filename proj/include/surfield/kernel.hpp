#pragma once

#include <optional>
#include <vector>

#include "surfield/types.hpp"

namespace surfield {

/// Value, gradient and Hessian of K(x, v) with respect to x.
struct KernelJet {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

/// Gaussian smoothing kernel K(x, v) = prod_d exp(-4 log 2 (x_d - v_d)^2 / f_d^2).
///
/// With a truncation radius rho the kernel is exactly zero for |x - v| > rho; the relative
/// error this introduces is bounded by exp(-4 log 2 rho^2 / f^2) (isotropic f).
class GaussianKernel {
 public:
  explicit GaussianKernel(std::vector<double> fwhm, std::optional<double> truncation = std::nullopt);
  static GaussianKernel isotropic(int dim, double fwhm, std::optional<double> truncation = std::nullopt);

  int dim() const noexcept { return static_cast<int>(fwhm_.size()); }
  double fwhm(int d) const { return fwhm_[d]; }
  const std::vector<double>& fwhms() const noexcept { return fwhm_; }
  /// Gaussian variance f_d^2 / (8 log 2).
  double sigma2(int d) const;
  /// Exponent coefficient c_d = 4 log 2 / f_d^2.
  double rate(int d) const { return rate_[d]; }
  const std::optional<double>& truncation() const noexcept { return truncation_; }
  bool is_isotropic() const;

  /// One-dimensional factor exp(-c_d t^2) or its first / second derivative in t.
  double factor(int d, double t, int derivative = 0) const;

  bool within_support(const Vec& x, const Vec& v) const;

  double value(const Vec& x, const Vec& v) const;
  Vec gradient(const Vec& x, const Vec& v) const;
  Mat hessian(const Vec& x, const Vec& v) const;
  /// Everything up to `order` in one pass; higher-order members are left empty.
  KernelJet jet(const Vec& x, const Vec& v, Order order) const;

  /// Relative error bound exp(-c rho^2) of the truncation (0 when untruncated), using the
  /// largest FWHM.
  double truncation_error_bound() const;

 private:
  std::vector<double> fwhm_;
  std::vector<double> rate_;
  std::optional<double> truncation_;
};

}  // namespace surfield
