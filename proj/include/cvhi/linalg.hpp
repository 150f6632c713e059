#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cvhi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Spectral norm (largest singular value). Zero for empty matrices.
double op_norm(const Mat& m);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// Eigen-decomposition of the symmetric part with negative eigenvalues dropped.
Mat psd_part(const Mat& m);

double min_sym_eigenvalue(const Mat& m);

std::string format_vec(const Vec& v);

// Linear map between coordinate spaces, stored as a dense matrix.
class LinearMap {
 public:
  LinearMap() = default;
  explicit LinearMap(Mat m);
  static LinearMap identity(int n);
  static LinearMap zero(int rows, int cols);

  int rows() const { return static_cast<int>(m_.rows()); }
  int cols() const { return static_cast<int>(m_.cols()); }
  const Mat& matrix() const { return m_; }
  double norm() const { return norm_; }

  Vec apply(const Vec& x) const { return m_ * x; }
  Vec adjoint(const Vec& y) const { return m_.transpose() * y; }

 private:
  Mat m_;
  double norm_ = 0.0;
};

}  // namespace cvhi
