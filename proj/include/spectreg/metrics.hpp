// metrics.hpp - Dice overlap, 95th-percentile Hausdorff distance and nearest-neighbor label warping.

#pragma once

#include "spectreg/core.hpp"

#include <map>
#include <optional>
#include <set>

namespace spectreg {

struct DiceResult {
    std::map<std::int32_t, double> per_label;
    // Requested labels absent from both maps.
    std::vector<std::int32_t> skipped;
    double mean = 0.0;
};

// Dice per label; an empty `labels` set evaluates every nonzero label present in either map.
DiceResult dice(const LabelMap &a, const LabelMap &b, const std::set<std::int32_t> &labels = {});

// Nearest-neighbor sampling at x + phi(x) with border clamping.
LabelMap warp_labels(const LabelMap &labels, const DenseField &phi);

// Foreground voxels of `label` with at least one face neighbor outside the label (voxels
// outside the grid count as background). Returned as flat indices in ascending order.
std::vector<std::int64_t> boundary_voxels(const LabelMap &map, std::int32_t label);

// 95th percentile, linearly interpolated between order statistics, of the pooled nearest
// boundary distances A->B and B->A, in voxels.
double hd95(const LabelMap &a, const LabelMap &b, std::int32_t label);

// Percentile q in [0, 100] of `values` using linear interpolation at rank q/100 * (n - 1).
double percentile(std::vector<double> values, double q);

// Squared Euclidean distance from every voxel to the nearest voxel where `mask` is set.
// Exact (integer valued). Voxels are infinitely far when the mask is empty.
std::vector<double> squared_distance_transform(const GridSpec &grid, std::span<const std::uint8_t> mask);

struct MetricReport {
    std::map<std::int32_t, double> dice_per_label;
    double dice_mean = 0.0;
    std::map<std::int32_t, double> hd95_per_label;
    double hd95_mean = 0.0;
    std::optional<double> folding_percent;
};

// Dice and HD95 for each label present in both maps; folding when a field is supplied.
MetricReport evaluate(const LabelMap &a, const LabelMap &b, const std::set<std::int32_t> &labels = {},
                      const DenseField *phi = nullptr);

} // namespace spectreg
