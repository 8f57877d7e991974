#include <cmath>
#include <limits>
#include <stdexcept>

#include "oblimatch/errors.hpp"
#include "oblimatch/matcher.hpp"

namespace oblimatch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sum += std::exp(x[i] - m);
  return m + std::log(sum);
}

}  // namespace

AssignmentMatrix sinkhorn(const Eigen::MatrixXd& scores, double dustbin_score, int iters) {
  if (iters < 1) throw std::invalid_argument("sinkhorn: iters must be >= 1");
  if (!scores.allFinite() || !std::isfinite(dustbin_score)) throw NonFiniteScore();

  const Eigen::Index m = scores.rows();
  const Eigen::Index n = scores.cols();

  Eigen::MatrixXd cost(m + 1, n + 1);
  cost.setConstant(dustbin_score);
  cost.topLeftCorner(m, n) = scores;

  Eigen::VectorXd log_row_target = Eigen::VectorXd::Zero(m + 1);
  log_row_target[m] = std::log(static_cast<double>(n));  // -inf when n == 0
  Eigen::VectorXd log_col_target = Eigen::VectorXd::Zero(n + 1);
  log_col_target[n] = std::log(static_cast<double>(m));

  Eigen::VectorXd u = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);

  // Column update first, row update last: the returned matrix then satisfies
  // the row marginals exactly while columns converge.
  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index j = 0; j <= n; ++j) {
      v[j] = log_col_target[j] - log_sum_exp(cost.col(j) + u);
    }
    for (Eigen::Index i = 0; i <= m; ++i) {
      u[i] = log_row_target[i] - log_sum_exp(cost.row(i).transpose() + v);
    }
  }

  AssignmentMatrix out;
  out.rows_a = static_cast<int>(m);
  out.cols_b = static_cast<int>(n);
  out.p = ((cost.colwise() + u).rowwise() + v.transpose()).array().exp();
  return out;
}

}  // namespace oblimatch
