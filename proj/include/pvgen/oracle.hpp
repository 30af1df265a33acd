#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "pvgen/rng.hpp"

namespace pvgen {

// Largest number of HR label configurations the oracle will enumerate.
inline constexpr double kEnumerationCap = 1e7;

struct BlurTap {
  int hr_index = 0;
  double weight = 0.0;
};

// Tiny single-channel PV model for exact inference. Classes are 0-based
// indices. Each LR voxel is a weighted sum of HR voxels; supports of
// different LR voxels are disjoint so LR voxels are independent given labels.
// Bias is fixed to 1 and deformation to identity.
struct TinyPvModel {
  int classes = 2;                                // K
  int ratio = 1;                                  // M, HR voxels per LR voxel
  std::vector<std::vector<double>> atlas;         // J rows of K prior probabilities
  std::vector<double> means;                      // K
  std::vector<double> variances;                  // K
  std::vector<std::vector<BlurTap>> blur_weights; // J' lists

  int hr_count() const { return static_cast<int>(atlas.size()); }
  int lr_count() const { return static_cast<int>(blur_weights.size()); }
  // K^J as a double (exact below 2^53).
  double configuration_count() const;

  // Structural invariants; does not check the enumeration cap.
  void validate() const;

  nlohmann::json to_json() const;
  static TinyPvModel from_json(const nlohmann::json& j);
};

// Partition weights: LR voxel j' covers HR voxels [M j', M j' + M) and weighs
// them by the Gaussian kernel of std `sigma` centred on HR voxel M j' (the
// corner-aligned LR voxel centre), renormalised over the footprint.
std::vector<std::vector<BlurTap>> partition_blur_weights(int hr_count, int ratio, double sigma);

// log p(obs | labels): each LR voxel ~ N(sum w mu_L, sum w^2 sigma^2_L).
// A zero-variance LR voxel contributes 0 when the observation matches its
// mean and -inf otherwise.
double lr_likelihood(const TinyPvModel& model, std::span<const int> labels, std::span<const double> lr_obs);

struct PvPosterior {
  std::vector<double> probability;  // K^J entries, lexicographic label order
  std::vector<double> marginals;    // J x K
  std::vector<int> map_labels;      // ties -> lexicographically smallest
  double log_evidence = 0.0;        // log sum_L p(obs | L) p(L)

  double marginal(int hr_voxel, int cls, int classes) const {
    return marginals[static_cast<std::size_t>(hr_voxel) * static_cast<std::size_t>(classes) +
                     static_cast<std::size_t>(cls)];
  }
};

// Lexicographic configuration index <-> labels (voxel 0 most significant).
std::uint64_t configuration_index(std::span<const int> labels, int classes);
std::vector<int> configuration_labels(std::uint64_t index, int hr_count, int classes);

struct CostEstimate {
  std::uint64_t prior_evaluations = 0;
  std::uint64_t likelihood_evaluations = 0;

  bool operator==(const CostEstimate&) const = default;
};

// Evaluation counts of the two-class-mixing, rectangular-kernel PV
// marginalisation: K(K-1) 2^(M-1) prior and K(K-1)(1+M)/2 likelihood terms.
CostEstimate cost_estimate(int classes, int ratio);

class OracleCapExceeded : public std::runtime_error {
 public:
  OracleCapExceeded(double configurations, CostEstimate cost);
  double configurations() const { return configurations_; }
  const CostEstimate& cost() const { return cost_; }

 private:
  double configurations_;
  CostEstimate cost_;
};

// Brute-force posterior over all K^J configurations. Throws OracleCapExceeded
// past kEnumerationCap. Results do not depend on `workers`.
PvPosterior exact_posterior(const TinyPvModel& model, std::span<const double> lr_obs, int workers = 1);

struct ConsistencyStats {
  int samples = 0;
  double mean_true_posterior = 0.0;  // mean posterior mass on the generating configuration
  double marginal_accuracy = 0.0;    // per-voxel argmax-marginal accuracy
  double map_accuracy = 0.0;         // per-voxel accuracy of the MAP configuration
};

// Samples labels from the atlas, intensities from the GMM, applies the blur
// weights and scores the exact posterior against the truth.
ConsistencyStats generator_consistency_score(const TinyPvModel& model, int n_samples, RandomStream& rng);

}  // namespace pvgen
