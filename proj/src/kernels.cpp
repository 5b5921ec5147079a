#include "react/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace react::kernels {

namespace ref {

void affine(const Matrix& W, const Matrix& b, const double* in, double* out) {
  const Eigen::Index rows = W.rows();
  const Eigen::Index cols = W.cols();
  for (Eigen::Index i = 0; i < rows; ++i) {
    double acc = b(i, 0);
    for (Eigen::Index j = 0; j < cols; ++j) acc += W(i, j) * in[j];
    out[i] = acc;
  }
}

void affine_backward(const Matrix& W, const double* in, const double* g, Matrix& dW, Matrix& db,
                     double* din) {
  const Eigen::Index rows = W.rows();
  const Eigen::Index cols = W.cols();
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) dW(i, j) += g[i] * in[j];
  for (Eigen::Index i = 0; i < rows; ++i) db(i, 0) += g[i];
  if (din == nullptr) return;
  for (Eigen::Index j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) acc += W(i, j) * g[i];
    din[j] = acc;
  }
}

void relu(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(v[i] > 0.0)) v[i] = 0.0;
}

void relu_backward(const double* pre, double* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(pre[i] > 0.0)) g[i] = 0.0;
}

}  // namespace ref

namespace par {

void affine(const Matrix& W, const Matrix& b, const Matrix& X, Matrix& Y) {
  Y.noalias() = W * X;
  const Eigen::Index n = Y.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < n; ++c) Y.col(c) += b.col(0);
}

void affine_backward(const Matrix& W, const Matrix& X, const Matrix& G, Matrix& dW, Matrix& db,
                     Matrix* dX) {
  dW.noalias() += G * X.transpose();
  db.col(0) += G.rowwise().sum();
  if (dX != nullptr) dX->noalias() = W.transpose() * G;
}

void relu(Matrix& Z) {
  const Eigen::Index n = Z.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < n; ++c) Z.col(c) = Z.col(c).cwiseMax(0.0);
}

void relu_backward(const Matrix& pre, Matrix& G) {
  const Eigen::Index n = G.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < n; ++c)
    G.col(c) = (pre.col(c).array() > 0.0).select(G.col(c), 0.0);
}

void hadamard(Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < n; ++c) A.col(c).array() *= B.col(c).array();
}

}  // namespace par

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace react::kernels
