#include "fft.hpp"

#include <mutex>
#include <stdexcept>

namespace modheat::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(int dim, int n, int sign) {
  int dims[3] = {n, n, n};
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n);
  std::vector<std::complex<double>> a(size_), b(size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_ = fftw_plan_dft(dim, dims, reinterpret_cast<fftw_complex*>(a.data()),
                        reinterpret_cast<fftw_complex*>(b.data()), sign,
                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_) throw std::runtime_error("fftw plan creation failed");
}

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan_);
}

void FftPlan::execute(std::span<const std::complex<double>> in,
                      std::span<std::complex<double>> out) const {
  if (in.size() != size_ || out.size() != size_)
    throw std::invalid_argument("fft: buffer size does not match plan");
  // FFTW does not write to the input of an out-of-place complex plan.
  auto* src = const_cast<std::complex<double>*>(in.data());
  fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(src),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace modheat::detail
