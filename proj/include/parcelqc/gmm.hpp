#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parcelqc/synth_qc.hpp"

namespace parcelqc {

/// 90th percentile of the standard normal distribution.
inline constexpr double kStdNormal90 = 1.2815515655446004;

/// Two-component 1D Gaussian mixture. Component 0 is the lower-mean
/// ("misaligned") component; the rejection threshold is mean[0] +
/// z^0.9 * stddev[0].
struct GmmFit {
    std::array<double, 2> weight{0.5, 0.5};
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 2> stddev{1.0, 1.0};
    double log_likelihood = 0.0;
    int iterations = 0;
    double threshold = 0.0;
    std::vector<double> ll_history; // one entry per EM iteration
};

/// EM fit of the two-component mixture. Deterministic: means start at the
/// 25th/75th percentiles, stddevs at half the sample stddev, weights at 1/2.
/// Converges when the log-likelihood gain drops below tol. The seed is
/// reserved for randomized restarts and currently unused.
/// Requires n >= 8 and non-degenerate data (sample stddev >= 1e-12).
GmmFit fit_gmm2(const std::vector<double>& scores, double tol = 1e-8, int max_iter = 1000,
                std::uint64_t seed = 0);
GmmFit fit_gmm2(const QcScoreSet& scores, double tol = 1e-8, int max_iter = 1000,
                std::uint64_t seed = 0);

/// mean + z^0.9 * stddev of the lower-mean component, whichever slot it is in.
double rejection_threshold(const GmmFit& fit);

/// pass <=> score > threshold; a score exactly at the threshold is rejected.
std::vector<std::pair<std::string, bool>> classify_scores(const QcScoreSet& scores,
                                                          double threshold);

} // namespace parcelqc
