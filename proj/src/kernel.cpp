#include "surfield/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "surfield/error.hpp"

namespace surfield {

namespace {
const double kFourLog2 = 4.0 * std::numbers::ln2;
}

GaussianKernel::GaussianKernel(std::vector<double> fwhm, std::optional<double> truncation)
    : fwhm_(std::move(fwhm)), truncation_(truncation) {
  if (fwhm_.empty() || fwhm_.size() > static_cast<std::size_t>(kMaxDim)) {
    throw InvalidArgument("GaussianKernel: need 1 to 3 FWHM values");
  }
  for (double f : fwhm_) {
    if (!(f > 0.0) || !std::isfinite(f)) throw InvalidArgument("GaussianKernel: FWHM must be positive");
    rate_.push_back(kFourLog2 / (f * f));
  }
  if (truncation_ && !(*truncation_ > 0.0)) {
    throw InvalidArgument("GaussianKernel: truncation radius must be positive");
  }
}

GaussianKernel GaussianKernel::isotropic(int dim, double fwhm, std::optional<double> truncation) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("GaussianKernel: dimension must be 1, 2 or 3");
  return GaussianKernel(std::vector<double>(dim, fwhm), truncation);
}

double GaussianKernel::sigma2(int d) const { return fwhm_[d] * fwhm_[d] / (8.0 * std::numbers::ln2); }

bool GaussianKernel::is_isotropic() const {
  return std::all_of(fwhm_.begin(), fwhm_.end(), [&](double f) { return f == fwhm_.front(); });
}

double GaussianKernel::factor(int d, double t, int derivative) const {
  const double c = rate_[d];
  const double k = std::exp(-c * t * t);
  switch (derivative) {
    case 0:
      return k;
    case 1:
      return -2.0 * c * t * k;
    case 2:
      return (4.0 * c * c * t * t - 2.0 * c) * k;
    default:
      throw InvalidArgument("GaussianKernel::factor: derivative order must be 0, 1 or 2");
  }
}

bool GaussianKernel::within_support(const Vec& x, const Vec& v) const {
  if (!truncation_) return true;
  return (x - v).squaredNorm() <= *truncation_ * *truncation_;
}

double GaussianKernel::value(const Vec& x, const Vec& v) const { return jet(x, v, Order::value).value; }

Vec GaussianKernel::gradient(const Vec& x, const Vec& v) const { return jet(x, v, Order::gradient).gradient; }

Mat GaussianKernel::hessian(const Vec& x, const Vec& v) const { return jet(x, v, Order::hessian).hessian; }

KernelJet GaussianKernel::jet(const Vec& x, const Vec& v, Order order) const {
  const int D = dim();
  if (x.size() != D || v.size() != D) throw InvalidArgument("GaussianKernel: point dimension mismatch");
  KernelJet j;
  if (order != Order::value) j.gradient = Vec::Zero(D);
  if (order == Order::hessian) j.hessian = Mat::Zero(D, D);
  if (!within_support(x, v)) return j;

  double k0[kMaxDim], k1[kMaxDim], k2[kMaxDim];
  for (int d = 0; d < D; ++d) {
    const double t = x[d] - v[d];
    const double c = rate_[d];
    k0[d] = std::exp(-c * t * t);
    k1[d] = -2.0 * c * t * k0[d];
    k2[d] = (4.0 * c * c * t * t - 2.0 * c) * k0[d];
  }
  // products of the value factors with one or two axes left out
  auto rest = [&](int skip_a, int skip_b) {
    double p = 1.0;
    for (int d = 0; d < D; ++d) {
      if (d != skip_a && d != skip_b) p *= k0[d];
    }
    return p;
  };
  j.value = rest(-1, -1);
  if (order == Order::value) return j;
  for (int d = 0; d < D; ++d) j.gradient[d] = k1[d] * rest(d, -1);
  if (order == Order::gradient) return j;
  for (int d = 0; d < D; ++d) {
    j.hessian(d, d) = k2[d] * rest(d, -1);
    for (int e = d + 1; e < D; ++e) {
      j.hessian(d, e) = j.hessian(e, d) = k1[d] * k1[e] * rest(d, e);
    }
  }
  return j;
}

double GaussianKernel::truncation_error_bound() const {
  if (!truncation_) return 0.0;
  const double c = *std::min_element(rate_.begin(), rate_.end());
  return std::exp(-c * *truncation_ * *truncation_);
}

}  // namespace surfield
