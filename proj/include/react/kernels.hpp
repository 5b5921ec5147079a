#pragma once

// Dense-layer kernels in two flavours:
//   ref: single-sample, naive loops, serial. Kept as the reference the
//   batched kernels are tested and benchmarked against.
//   par: batched (features x batch) kernels. GEMMs go through Eigen,
//   elementwise passes are OpenMP-parallel over batch columns.

#include "react/types.hpp"

namespace react::kernels {

namespace ref {

// out = W * in + b
void affine(const Matrix& W, const Matrix& b, const double* in, double* out);

// Accumulates dW += g * in^T and db += g. If din is non-null, writes W^T g.
void affine_backward(const Matrix& W, const double* in, const double* g, Matrix& dW, Matrix& db,
                     double* din);

void relu(double* v, std::size_t n);

// Zeroes g wherever the pre-activation was <= 0.
void relu_backward(const double* pre, double* g, std::size_t n);

}  // namespace ref

namespace par {

// Y = W * X + b * 1^T
void affine(const Matrix& W, const Matrix& b, const Matrix& X, Matrix& Y);

// dW += G * X^T, db += rowsum(G); dX = W^T G when dX is non-null.
void affine_backward(const Matrix& W, const Matrix& X, const Matrix& G, Matrix& dW, Matrix& db,
                     Matrix* dX);

void relu(Matrix& Z);
void relu_backward(const Matrix& pre, Matrix& G);

// Elementwise product, parallel over columns.
void hadamard(Matrix& A, const Matrix& B);

}  // namespace par

// Number of OpenMP threads in use (1 when built without OpenMP).
int thread_count();
void set_thread_count(int n);

}  // namespace react::kernels
