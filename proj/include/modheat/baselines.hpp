#pragma once

// Regression constants measured once on the frozen test corpora and then
// fixed. None of them is a theoretical value; they pin down the otherwise
// unspecified equivalence constants so later changes cannot drift silently.

namespace modheat::baselines {

// Unit Gaussian e^{-x^2/2}, d = 1, L = 16, N = 256:
// ||f||_{M^{2,2}} (decomposition) / ||f||_2.
inline constexpr double kDecompL2Gaussian = 0.839723231683;
// Bracket [1/C, C] for that ratio.
inline constexpr double kDecompL2Bracket = 1.2;

// STFT / decomposition estimates of M^{2,1} on the random envelope corpus
// (measured range 1.229 .. 1.309).
inline constexpr double kStftDecompBracket = 1.35;

// ||f||_{FL^1} <= C ||f||_{M^{2,1}} on the same corpus (measured max 1.143).
inline constexpr double kFourierLebesgueEmbedding = 1.2;

// ||g^2||_{M^{2,1}} / ||g||_{M^{2,1}}^2 for the unit Gaussian.
inline constexpr double kAlgebraGaussian = 0.445057827599;

// max_f ||U_2(0.01) f||_{M^{2,1}} / ||f||_{M^{2,1}} over envelope_corpus(grid,
// 10, 4, 2.0, 11), d = 1, L = 32, N = 512.
inline constexpr double kSemigroupConstant = 0.936972133317;

// Global slack S with a_i / S <= u_hat_i for the Picard levels i <= 6 of the
// corrected sinc datum (k = 2, beta = 2, r = 1), t in [0.025, 0.25], 100 steps.
// Measured 3.6814; the 200-step value is 3.6825.
inline constexpr double kPicardSlack = 3.7;

// Empirical C_beta: max over t in [0.05, 5] and hermite_family(K = 20, 4, 6,
// seed 5) of ||e^{-tH^beta} f||_{M^{p,p}} e^{t} t^{1/beta} / ||f||_{M^{p,p}},
// d = 1, p in {1, 2, 4}. Attained by Phi_0 at t = 5, where the ratio is 5^{1/beta}.
inline constexpr double kDecayConstantBeta1 = 5.0;
inline constexpr double kDecayConstantBeta2 = 2.2360679775;

// Transference slack: max_f rho_f / kernel_l1_norm over hermite_family(K = 24,
// 20, 8, seed 17), d = 1, (beta, t) in {(1,1), (2,0.5), (1,0.2), (0.5,1)},
// p in {1, 2, 4}. Measured 0.99992 (attained by Phi_0).
inline constexpr double kTransferSlack = 1.0;

}  // namespace modheat::baselines
