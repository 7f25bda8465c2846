#include <algorithm>
#include <cmath>

#include "evoplace/dse.hpp"
#include "evoplace/error.hpp"

namespace evoplace::dse {

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& k) {
  const double d2 = (a - b).squaredNorm();
  return k.signal_var * std::exp(-0.5 * d2 / (k.length_scale * k.length_scale));
}

GpModel gp_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y, const KernelParams& k,
               double prior_mean) {
  if (X.empty()) throw Error(ErrorCode::InvalidArgument, "gp_fit needs at least one observation");
  if (X.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "gp_fit: X and y sizes differ");
  if (!(k.length_scale > 0) || !(k.signal_var > 0) || !(k.noise_var >= 0))
    throw Error(ErrorCode::InvalidArgument, "gp_fit: kernel parameters must be positive");
  const std::size_t d = X.front().size();

  // average duplicate inputs, first occurrence keeps its place
  std::vector<std::vector<double>> ux;
  std::vector<double> sum;
  std::vector<int> cnt;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != d) throw Error(ErrorCode::InvalidArgument, "gp_fit: inconsistent input dimension");
    if (!std::isfinite(y[i])) throw Error(ErrorCode::InvalidArgument, "gp_fit: non-finite target");
    const auto it = std::find(ux.begin(), ux.end(), X[i]);
    if (it == ux.end()) {
      ux.push_back(X[i]);
      sum.push_back(y[i]);
      cnt.push_back(1);
    } else {
      const auto j = static_cast<std::size_t>(it - ux.begin());
      sum[j] += y[i];
      ++cnt[j];
    }
  }

  GpModel m;
  m.kernel = k;
  m.prior_mean = prior_mean;
  const auto n = static_cast<Eigen::Index>(ux.size());
  m.X.resize(n, static_cast<Eigen::Index>(d));
  m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) m.X(i, static_cast<Eigen::Index>(c)) = ux[static_cast<std::size_t>(i)][c];
    m.y(i) = sum[static_cast<std::size_t>(i)] / cnt[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = se_kernel(m.X.row(i).transpose(), m.X.row(j).transpose(), k);

  for (double jitter = 1e-10; jitter <= 1e-4 * (1 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += k.noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    m.jitter = jitter;
    m.L = llt.matrixL();
    m.alpha = llt.solve((m.y.array() - prior_mean).matrix());
    return m;
  }
  throw Error(ErrorCode::SingularCovariance, "covariance not positive definite after jitter 1e-4");
}

Prediction gp_predict(const GpModel& m, const std::vector<double>& x) {
  if (static_cast<Eigen::Index>(x.size()) != m.X.cols())
    throw Error(ErrorCode::InvalidArgument, "gp_predict: input dimension mismatch");
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd ks(m.X.rows());
  for (Eigen::Index i = 0; i < m.X.rows(); ++i) ks(i) = se_kernel(m.X.row(i).transpose(), xv, m.kernel);
  Prediction p;
  p.mu = m.prior_mean + ks.dot(m.alpha);
  const Eigen::VectorXd v = m.L.triangularView<Eigen::Lower>().solve(ks);
  const double var = std::max(0.0, m.kernel.signal_var - v.squaredNorm());
  p.sigma = std::sqrt(var);
  p.sigma_obs = std::sqrt(var + m.kernel.noise_var);
  return p;
}

double expected_improvement(double mu, double sigma, double best_y, double xi) {
  const double imp = best_y - mu - xi;
  if (!(sigma > 0.0)) return std::max(imp, 0.0);
  const double z = imp / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  return std::max(0.0, imp * cdf + sigma * pdf);
}

double median_pairwise_distance(const std::vector<std::vector<double>>& X) {
  std::vector<double> d;
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = i + 1; j < X.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < X[i].size(); ++c) s += (X[i][c] - X[j][c]) * (X[i][c] - X[j][c]);
      d.push_back(std::sqrt(s));
    }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double med = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return med > 0.0 ? med : 1.0;
}

}  // namespace evoplace::dse
