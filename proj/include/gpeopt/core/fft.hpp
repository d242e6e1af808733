#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "gpeopt/core/field.hpp"
#include "gpeopt/core/grid.hpp"
#include "gpeopt/core/parallel.hpp"

namespace gpeopt {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place complex DFT pair for one grid shape. Both directions are
/// unnormalized (backward(forward(x)) = J*x). Plans use FFTW_ESTIMATE, so the
/// arithmetic, and therefore every result, is identical from run to run.
class FftPlan {
 public:
  explicit FftPlan(const Grid& grid) : size_(grid.size()) {
    std::vector<int> n(grid.points().begin(), grid.points().end());
    ComplexArray scratch(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(detail::fftw_planner_mutex());
#ifdef GPEOPT_FFTW_THREADS
    static const bool threads_ready = fftw_init_threads() != 0;
    if (threads_ready) fftw_plan_with_nthreads(thread_count());
#endif
    forward_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward_ || !backward_) throw NumericalError("fft: plan creation failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& o) noexcept : size_(o.size_), forward_(o.forward_), backward_(o.backward_) {
    o.forward_ = o.backward_ = nullptr;
  }
  FftPlan& operator=(FftPlan&& o) noexcept {
    if (this != &o) {
      release();
      size_ = o.size_;
      forward_ = o.forward_;
      backward_ = o.backward_;
      o.forward_ = o.backward_ = nullptr;
    }
    return *this;
  }
  ~FftPlan() { release(); }

  void forward(std::span<cplx> data) const { run(forward_, data); }
  void backward(std::span<cplx> data) const { run(backward_, data); }
  std::size_t size() const noexcept { return size_; }

 private:
  void run(fftw_plan p, std::span<cplx> data) const {
    if (data.size() != size_) throw ShapeError("fft: buffer size does not match plan");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, buf, buf);
  }
  void release() noexcept {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    forward_ = backward_ = nullptr;
  }

  std::size_t size_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// |k|^2 on the spectral grid, in the layout FftPlan produces.
inline RealArray squared_wavenumbers(const Grid& grid) {
  RealArray k2(grid.size());
  if (grid.rank() == 1) {
    const auto kx = grid.wavenumbers(0);
    for (std::size_t i = 0; i < kx.size(); ++i) k2[i] = kx[i] * kx[i];
    return k2;
  }
  const auto kx = grid.wavenumbers(0), ky = grid.wavenumbers(1), kz = grid.wavenumbers(2);
  std::size_t idx = 0;
  for (double a : kx)
    for (double b : ky)
      for (double c : kz) k2[idx++] = a * a + b * b + c * c;
  return k2;
}

}  // namespace gpeopt
