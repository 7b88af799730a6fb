#include "wearcnn/splits.hpp"

#include "wearcnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace wearcnn {

int class_of_radius(double radius_mm) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (std::abs(radius_mm - kEdgeRadiiMm[static_cast<std::size_t>(i)]) <= 1e-9) return i;
  }
  throw std::invalid_argument("class_of_radius: " + std::to_string(radius_mm) +
                              " mm is not one of the sixteen edge radii");
}

double radius_of_class(int class_index) {
  if (class_index < 0 || class_index >= kNumClasses) {
    throw std::invalid_argument("radius_of_class: index " + std::to_string(class_index) +
                                " out of range [0, 16)");
  }
  return kEdgeRadiiMm[static_cast<std::size_t>(class_index)];
}

namespace {

/// Workpiece ids in ascending order with their records grouped; the stable
/// base ordering makes splits a pure function of (manifest, seed).
std::map<int, std::vector<SampleRecord>> group_by_workpiece(const DatasetManifest& manifest) {
  std::map<int, std::vector<SampleRecord>> groups;
  for (const auto& record : manifest.records) {
    groups[record.workpiece_id].push_back(record);
  }
  return groups;
}

void append_group(std::vector<SampleRecord>& out, const std::vector<SampleRecord>& group) {
  out.insert(out.end(), group.begin(), group.end());
}

}  // namespace

Split fractional_split(const DatasetManifest& manifest, double train_fraction,
                       double val_fraction, double test_fraction, std::uint64_t seed) {
  if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0 ||
      std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("fractional_split: fractions must be nonnegative and sum to 1");
  }
  const auto groups = group_by_workpiece(manifest);
  std::vector<int> workpieces;
  workpieces.reserve(groups.size());
  for (const auto& [id, records] : groups) workpieces.push_back(id);

  Rng rng(derive_seed(seed, "fractional_split"));
  shuffle(workpieces, rng);

  const auto total = static_cast<long long>(workpieces.size());
  const auto n_val = static_cast<long long>(std::floor(val_fraction * static_cast<double>(total)));
  const auto n_test =
      static_cast<long long>(std::floor(test_fraction * static_cast<double>(total)));
  const long long n_train = total - n_val - n_test;

  Split split;
  for (long long i = 0; i < total; ++i) {
    const auto& group = groups.at(workpieces[static_cast<std::size_t>(i)]);
    if (i < n_train) {
      append_group(split.train, group);
    } else if (i < n_train + n_val) {
      append_group(split.val, group);
    } else {
      append_group(split.test, group);
    }
  }
  return split;
}

namespace {

/// Takes whole workpieces from `pool` (already shuffled) whose image counts
/// sum to exactly `target`; subset-sum over the shuffled order keeps the
/// selection deterministic and prefers earlier (random) workpieces.
std::vector<int> take_exactly(std::vector<int>& pool,
                              const std::map<int, std::vector<SampleRecord>>& groups, int target,
                              const char* phase, int class_index) {
  if (target == 0) return {};
  std::vector<int> from_item(static_cast<std::size_t>(target) + 1, -1);
  std::vector<int> from_sum(static_cast<std::size_t>(target) + 1, -1);
  std::vector<char> reachable(static_cast<std::size_t>(target) + 1, 0);
  reachable[0] = 1;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int size = static_cast<int>(groups.at(pool[i]).size());
    for (int s = target; s >= size; --s) {
      if (!reachable[static_cast<std::size_t>(s)] && reachable[static_cast<std::size_t>(s - size)]) {
        reachable[static_cast<std::size_t>(s)] = 1;
        from_item[static_cast<std::size_t>(s)] = static_cast<int>(i);
        from_sum[static_cast<std::size_t>(s)] = s - size;
      }
    }
  }
  if (!reachable[static_cast<std::size_t>(target)]) {
    throw std::runtime_error("per_class_holdout: class " + std::to_string(class_index) +
                             " cannot reserve exactly " + std::to_string(target) + " " + phase +
                             " images from whole workpieces");
  }

  std::vector<char> chosen(pool.size(), 0);
  for (int s = target; s > 0; s = from_sum[static_cast<std::size_t>(s)]) {
    chosen[static_cast<std::size_t>(from_item[static_cast<std::size_t>(s)])] = 1;
  }
  std::vector<int> taken;
  std::vector<int> rest;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (chosen[i] ? taken : rest).push_back(pool[i]);
  }
  pool = std::move(rest);
  return taken;
}

}  // namespace

Split per_class_holdout(const DatasetManifest& manifest, int n_val, int n_test,
                        std::uint64_t seed) {
  if (n_val < 0 || n_test < 0) {
    throw std::invalid_argument("per_class_holdout: holdout counts must be >= 0");
  }
  const auto groups = group_by_workpiece(manifest);

  std::map<int, std::vector<int>> class_workpieces;
  for (const auto& [id, records] : groups) {
    const int class_index = records.front().class_index;
    for (const auto& record : records) {
      if (record.class_index != class_index) {
        throw std::runtime_error("per_class_holdout: workpiece " + std::to_string(id) +
                                 " spans multiple classes");
      }
    }
    class_workpieces[class_index].push_back(id);
  }

  Split split;
  for (auto& [class_index, pool] : class_workpieces) {
    Rng rng(derive_seed(seed, "per_class_holdout", static_cast<std::uint64_t>(class_index)));
    shuffle(pool, rng);
    const auto val_ids = take_exactly(pool, groups, n_val, "validation", class_index);
    const auto test_ids = take_exactly(pool, groups, n_test, "test", class_index);
    for (int id : val_ids) append_group(split.val, groups.at(id));
    for (int id : test_ids) append_group(split.test, groups.at(id));
    for (int id : pool) append_group(split.train, groups.at(id));
  }
  return split;
}

}  // namespace wearcnn
