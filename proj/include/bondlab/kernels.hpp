#pragma once

// Data-parallel kernels. Every kernel has a serial reference and an OpenMP
// version; the two produce bit-identical results for any thread count because
// work is split into fixed units that each own their accumulators and RNG
// streams.

#include "bondlab/core.hpp"

#include <functional>

namespace bondlab::kernels {

enum class Exec { serial, parallel };

/// Gamma_j = (1/T) sum_{t>j} x_t x_{t-j}' for j = 0..max_lag. X must already be centered.
std::vector<Mat> autocovariances(const Mat& Xc, int max_lag, Exec ex = Exec::parallel);

/// Fraction of draws with sum_i w_i z_i^2 >= x, z iid N(0,1). Draws are generated in
/// chunks of kChunk, chunk c using make_stream(seed, c).
inline constexpr long long kChunk = 4096;
double weighted_chi2_sf(const Vec& w, double x, long long draws, std::uint64_t seed, Exec ex = Exec::parallel);

/// Runs fn(b, rng) for b = 0..B-1 with rng = make_stream(seed, b); row b of the result holds
/// the returned vector (all of length dim).
Mat replicate(int B, int dim, std::uint64_t seed, const std::function<Vec(int, std::mt19937_64&)>& fn,
              Exec ex = Exec::parallel);

void for_each_index(long n, const std::function<void(long)>& fn, Exec ex = Exec::parallel);

enum class RollMode { slopes, covariances };

/// Rolling time-series statistics of each column of Y (T x N, NaN = missing) on the factors F
/// (T x K, complete). Entry t of the output uses months t-window .. t-1 where Y is observed;
/// fewer than min_obs observations gives NaN. slopes: OLS slopes of y on [1, F] (K of them);
/// covariances: cov(y, F_k) with divisor n. Result[k] is T x N.
std::vector<Mat> rolling_stats(const Mat& Y, const Mat& F, int window, int min_obs, RollMode mode,
                               Exec ex = Exec::parallel);

}  // namespace bondlab::kernels
