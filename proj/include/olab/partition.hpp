#pragma once

// IID and label-skewed assignment of classification samples to workers.

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "olab/core.hpp"
#include "olab/objectives.hpp"

namespace olab {

struct PartitionPlan {
  std::vector<std::vector<std::size_t>> assignments;  // worker -> sample indices
  // Label-skew bookkeeping; empty for IID plans.
  std::size_t n_total = 0;
  std::size_t n_skew = 0;
  std::vector<int> dominant_class;
  std::vector<std::size_t> shortfall;  // per worker: dominant-class samples missing

  std::size_t num_workers() const noexcept { return assignments.size(); }
};

/// Random permutation split into m contiguous chunks whose sizes differ by at most one.
PartitionPlan iid_partition(std::size_t n_samples, std::size_t m, const RngStream& rng);

/// Worker i gets n_skew samples of class (i mod num_classes) and n_total - n_skew
/// samples drawn uniformly from what remains of the other classes. A dominant
/// class that runs out is recorded as a shortfall and topped up from the remainder.
PartitionPlan label_skew_partition(const std::vector<int>& labels, std::size_t m, std::size_t n_total,
                                   std::size_t n_skew, const RngStream& rng);

/// Builds the per-worker logistic objectives from a pool and a plan.
LogisticEnsemble make_logistic(const ClassificationPool& pool, const PartitionPlan& plan, double lambda,
                               std::size_t batch);

void to_json(nlohmann::json& j, const PartitionPlan& plan);

}  // namespace olab
