#include "olab/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace olab {

namespace {

void shuffle(std::vector<std::size_t>& xs, RngStream& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.below(i)]);
}

}  // namespace

PartitionPlan iid_partition(std::size_t n_samples, std::size_t m, const RngStream& rng) {
  if (m < 1) throw std::invalid_argument("iid_partition: m must be >= 1");
  if (n_samples < m) {
    throw std::invalid_argument("iid_partition: n_samples (" + std::to_string(n_samples) + ") < m (" +
                                std::to_string(m) + ")");
  }
  std::vector<std::size_t> perm(n_samples);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream r = rng.derive("iid-partition");
  shuffle(perm, r);

  PartitionPlan plan;
  plan.assignments.resize(m);
  const std::size_t base = n_samples / m;
  const std::size_t extra = n_samples % m;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    plan.assignments[i].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                               perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return plan;
}

PartitionPlan label_skew_partition(const std::vector<int>& labels, std::size_t m, std::size_t n_total,
                                   std::size_t n_skew, const RngStream& rng) {
  if (m < 1) throw std::invalid_argument("label_skew_partition: m must be >= 1");
  if (n_skew > n_total) throw std::invalid_argument("label_skew_partition: n_skew > n_total");
  if (m * n_total > labels.size()) {
    throw std::invalid_argument("label_skew_partition: m * n_total (" + std::to_string(m * n_total) +
                                ") exceeds sample count (" + std::to_string(labels.size()) + ")");
  }
  int max_label = -1;
  for (int c : labels) {
    if (c < 0) throw std::invalid_argument("label_skew_partition: negative class label");
    max_label = std::max(max_label, c);
  }
  const std::size_t num_classes = static_cast<std::size_t>(max_label + 1);

  RngStream r = rng.derive("label-skew");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, r);

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t idx : order) by_class[static_cast<std::size_t>(labels[idx])].push_back(idx);
  std::vector<std::size_t> cursor(num_classes, 0);

  PartitionPlan plan;
  plan.n_total = n_total;
  plan.n_skew = n_skew;
  plan.assignments.resize(m);
  plan.dominant_class.resize(m);
  plan.shortfall.assign(m, 0);

  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = i % num_classes;
    plan.dominant_class[i] = static_cast<int>(c);
    auto& pool = by_class[c];
    const std::size_t available = pool.size() - cursor[c];
    const std::size_t grab = std::min(n_skew, available);
    for (std::size_t t = 0; t < grab; ++t) {
      const std::size_t idx = pool[cursor[c]++];
      plan.assignments[i].push_back(idx);
    }
    plan.shortfall[i] = n_skew - grab;
  }

  // Untaken samples per class, in shuffled order.
  std::vector<std::vector<std::size_t>> left(num_classes);
  std::size_t total_left = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    left[c].assign(by_class[c].begin() + static_cast<std::ptrdiff_t>(cursor[c]), by_class[c].end());
    total_left += left[c].size();
  }

  // Each fill sample is uniform over the remaining samples of the other classes,
  // so the worker holds exactly n_skew of its dominant class. Only when those are
  // exhausted does it fall back to its own class.
  for (std::size_t i = 0; i < m; ++i) {
    const auto own = static_cast<std::size_t>(plan.dominant_class[i]);
    auto& mine = plan.assignments[i];
    while (mine.size() < n_total) {
      const std::size_t others = total_left - left[own].size();
      std::size_t c = own;
      if (others > 0) {
        std::size_t j = r.below(others);
        for (c = 0; c < num_classes; ++c) {
          if (c == own) continue;
          if (j < left[c].size()) break;
          j -= left[c].size();
        }
      }
      mine.push_back(left[c].back());
      left[c].pop_back();
      --total_left;
    }
  }
  return plan;
}

LogisticEnsemble make_logistic(const ClassificationPool& pool, const PartitionPlan& plan, double lambda,
                               std::size_t batch) {
  std::vector<std::vector<LabeledSample>> data(plan.num_workers());
  for (std::size_t i = 0; i < plan.num_workers(); ++i) {
    data[i].reserve(plan.assignments[i].size());
    for (std::size_t idx : plan.assignments[i]) data[i].push_back({pool.features.at(idx), pool.binary_label(idx)});
  }
  return LogisticEnsemble(std::move(data), lambda, batch);
}

void to_json(nlohmann::json& j, const PartitionPlan& plan) {
  j = nlohmann::json{{"assignments", plan.assignments},
                     {"n_total", plan.n_total},
                     {"n_skew", plan.n_skew},
                     {"dominant_class", plan.dominant_class},
                     {"shortfall", plan.shortfall}};
}

}  // namespace olab
