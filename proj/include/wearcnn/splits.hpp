#pragma once

#include "wearcnn/manifest.hpp"

#include <array>
#include <cstdint>

namespace wearcnn {

/// The sixteen cutting-edge radii, ascending; class index 0 <-> 0 mm,
/// class 15 <-> 0.80 mm.
inline constexpr std::array<double, 16> kEdgeRadiiMm = {
    0.0, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40,
    0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};

inline constexpr int kNumClasses = 16;

/// Class index of a radius (tolerance 1e-9); throws on a non-member value.
int class_of_radius(double radius_mm);

double radius_of_class(int class_index);

/// Disjoint partitions; no workpiece spans two of them.
struct Split {
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> val;
  std::vector<SampleRecord> test;
};

/// Splits at workpiece granularity by shuffling workpiece ids under `seed`.
/// Fractions (train, val, test) apply to workpiece counts: floor for val and
/// test, remainder to train. Fractions must sum to 1 within 1e-9.
Split fractional_split(const DatasetManifest& manifest, double train_fraction,
                       double val_fraction, double test_fraction, std::uint64_t seed);

/// Reserves whole workpieces per class until exactly n_val / n_test images of
/// that class are held out for validation / test; everything else trains.
/// Throws when a class cannot supply the requested counts.
Split per_class_holdout(const DatasetManifest& manifest, int n_val, int n_test,
                        std::uint64_t seed);

}  // namespace wearcnn
