#include "cvhi/linalg.hpp"

#include <cmath>
#include <sstream>
#include <iomanip>

namespace cvhi {

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

Mat psd_part(const Mat& m) {
  Mat s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  Vec d = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double min_sym_eigenvalue(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Mat s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(10) << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ")";
  return os.str();
}

LinearMap::LinearMap(Mat m) : m_(std::move(m)), norm_(op_norm(m_)) {}

LinearMap LinearMap::identity(int n) { return LinearMap(Mat::Identity(n, n)); }

LinearMap LinearMap::zero(int rows, int cols) { return LinearMap(Mat::Zero(rows, cols)); }

}  // namespace cvhi
