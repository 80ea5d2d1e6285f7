#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace renormalens {

inline constexpr const char* kVersion = "0.3.1";

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Errc {
  NonNormalizable,
  GridTooNarrow,
  DimensionMismatch,
  NonPositiveState,
  InvalidSigma,
  InvalidParameter,
  InvalidState,
  InvalidChannel,
  ZeroFeature,
  IncompleteSpan,
  DimensionTooLarge,
  SingularX,
  ModeCouplingDetected,
  BasisTooLarge,
  UnsupportedInteraction,
  TruncationMismatch,
  DegeneracyUnresolved,
  NoConvergence,
};

const char* errc_name(Errc c) noexcept;

// Validation-type errors (bad inputs) versus numerical failures.
bool is_validation_error(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

template <class Scalar>
inline double real_part(const Scalar& s) {
  return std::real(s);
}

template <class Scalar>
inline constexpr bool is_complex_v = false;
template <>
inline constexpr bool is_complex_v<cplx> = true;

// Number of worker threads, honoring RENORMALENS_THREADS.
unsigned thread_count();

// Static-partition parallel loop over [0, n). f(i) must be independent per i.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace renormalens
