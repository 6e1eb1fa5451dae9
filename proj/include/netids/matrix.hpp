#pragma once

#include <cstddef>
#include <thread>
#include <vector>

#include "netids/common.hpp"

namespace netids {

template <typename T>
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, T(0)) {}

  T* row(size_t i) { return a.data() + i * cols; }
  const T* row(size_t i) const { return a.data() + i * cols; }
  T& at(size_t i, size_t j) { return a[i * cols + j]; }
  const T& at(size_t i, size_t j) const { return a[i * cols + j]; }
  void zero() { std::fill(a.begin(), a.end(), T(0)); }
};

namespace detail {

// Splits [0, n) into contiguous chunks, one per worker. Each worker writes
// disjoint output rows, so results are bitwise identical for any thread
// count.
template <typename Fn>
void parallel_rows(size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    fn(size_t(0), n);
    return;
  }
  size_t workers = std::min<size_t>(size_t(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// C = A(m×k) · B(k×n). Row-major ikj order keeps the inner loop contiguous.
template <typename T>
void gemm_nn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, int threads = 1) {
  if (A.cols != B.rows || C.rows != A.rows || C.cols != B.cols)
    throw ShapeMismatch("gemm_nn shape");
  detail::parallel_rows(A.rows, threads, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      T* c = C.a.data() + i * C.cols;
      std::fill(c, c + C.cols, T(0));
      const T* arow = A.row(i);
      for (size_t k = 0; k < A.cols; ++k) {
        T av = arow[k];
        if (av == T(0)) continue;
        const T* brow = B.row(k);
        for (size_t j = 0; j < C.cols; ++j) c[j] += av * brow[j];
      }
    }
  });
}

// C(m x n) = A^T * B for A(k x m), B(k x n).
template <typename T>
void gemm_tn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, int threads = 1) {
  if (A.rows != B.rows || C.rows != A.cols || C.cols != B.cols)
    throw ShapeMismatch("gemm_tn shape");
  C.zero();
  // Accumulation order over k is fixed regardless of threading: workers
  // partition output rows (columns of A), each scanning all of k.
  detail::parallel_rows(C.rows, threads, [&](size_t lo, size_t hi) {
    for (size_t k = 0; k < A.rows; ++k) {
      const T* arow = A.row(k);
      const T* brow = B.row(k);
      for (size_t i = lo; i < hi; ++i) {
        T av = arow[i];
        if (av == T(0)) continue;
        T* c = C.a.data() + i * C.cols;
        for (size_t j = 0; j < C.cols; ++j) c[j] += av * brow[j];
      }
    }
  });
}

// C(m×k) = A(m×n) · B(k×n)ᵀ.
template <typename T>
void gemm_nt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, int threads = 1) {
  if (A.cols != B.cols || C.rows != A.rows || C.cols != B.rows)
    throw ShapeMismatch("gemm_nt shape");
  detail::parallel_rows(A.rows, threads, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const T* arow = A.row(i);
      T* c = C.a.data() + i * C.cols;
      for (size_t j = 0; j < C.cols; ++j) {
        const T* brow = B.row(j);
        T s = 0;
        for (size_t k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
        c[j] = s;
      }
    }
  });
}

}  // namespace netids
