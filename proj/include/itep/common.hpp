#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace itep {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.3.0";

enum class ErrorCode {
  InvalidInput,   // precondition violated by the caller
  Degenerate,     // input sits on a branch/degeneracy set
  Singular,       // matrix or operator not invertible at the requested point
  Convergence,    // iterative procedure did not converge
  Config          // configuration rejected
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Reciprocal condition estimate of an LU factorization; 0 when a pivot is zero or
// not finite (Eigen's estimator reports 1 in that case).
double lu_rcond(const Eigen::PartialPivLU<CMat>& lu);

// Deterministic power-iteration estimate of the spectral norm.
double norm2_estimate(const CMat& A);

// Worker count used by the sample loops; 1 means fully sequential.
void set_num_threads(int n);
int num_threads();

// Runs body(i) for i in [0, n). Each index writes only its own slot, so the
// result does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace itep
