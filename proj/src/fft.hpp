#pragma once

#include <complex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace modheat::detail {

/// Unnormalized out-of-place complex DFT of a cube of side n in dim dimensions.
/// Plans are created once (the FFTW planner is not thread-safe, so creation and
/// destruction take a global lock); execution is reentrant.
class FftPlan {
 public:
  FftPlan(int dim, int n, int sign);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void execute(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) const;

 private:
  fftw_plan plan_ = nullptr;
  std::size_t size_ = 0;
};

struct FftPlans {
  FftPlans(int dim, int n) : forward(dim, n, FFTW_FORWARD), backward(dim, n, FFTW_BACKWARD) {}
  FftPlan forward;
  FftPlan backward;
};

}  // namespace modheat::detail
