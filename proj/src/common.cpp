#include "itep/common.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace itep {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads = std::max(1, n); }

int num_threads() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double lu_rcond(const Eigen::PartialPivLU<CMat>& lu) {
  const auto d = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d(i) == cplx(0.0) || !std::isfinite(std::abs(d(i)))) return 0.0;
  const double r = lu.rcond();
  return std::isfinite(r) ? r : 0.0;
}

double norm2_estimate(const CMat& A) {
  if (A.size() == 0) return 0.0;
  CVec x = CVec::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
  double est = 0.0;
  for (int it = 0; it < 60; ++it) {
    const CVec y = A.adjoint() * (A * x);
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    const double next = std::sqrt(ny);
    x = y / ny;
    if (std::abs(next - est) <= 1e-6 * next) return next;
    est = next;
  }
  return est;
}

}  // namespace itep
