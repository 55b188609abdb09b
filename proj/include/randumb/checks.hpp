#pragma once

// Property checks that compare the streaming library with the oracles.
// Shared by `randumb verify` and the test suite.

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "randumb/oracle.hpp"

namespace randumb::checks {

using oracle::OracleReport;

/// Class means and covariance of random streams (both estimator modes,
/// both normalizers, rank-1 and blocked updates) against two-pass batch
/// statistics, plus invariance to the order of the stream.
std::vector<OracleReport> streaming_vs_batch(std::uint64_t seed, int num_streams = 50);

/// Random Fourier inner products against the exact RBF kernel.
std::vector<OracleReport> rff_kernel(std::uint64_t seed);

/// OAS range, fixed point on scaled identities, and agreement with the
/// textbook transcription.
std::vector<OracleReport> oas(std::uint64_t seed);

/// Sequential Sherman-Morrison updates against a direct inverse.
std::vector<OracleReport> sherman_morrison(std::uint64_t seed);

/// Classifier predictions against batch LDA on balanced classes.
std::vector<OracleReport> lda_equivalence(std::uint64_t seed);

std::vector<OracleReport> run_all(std::uint64_t seed);

nlohmann::json to_json(const OracleReport& report);

}  // namespace randumb::checks
