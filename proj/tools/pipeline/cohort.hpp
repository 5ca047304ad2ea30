#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "abdoshape/geometry/synthetic.hpp"
#include "pipeline/manifest.hpp"

namespace abdoshape::pipeline {

struct CohortOptions {
  int per_class = 100;
  std::uint64_t seed = 7;
  /// Scales every class-1 parameter shift; 0 gives indistinguishable classes.
  double separation = 1.0;
  double spacing_mm = 2.0;
  std::string name = "synthetic";
};

struct SubjectShapes {
  geometry::SyntheticSpec liver;
  geometry::SyntheticSpec spleen;
};

/// Shape parameters of subject `index` (labels alternate 0, 1, 0, ...).
/// Liver-like shapes are larger and carry a lobe-like bump; class 1 livers are
/// somewhat larger with a stronger bump, class 1 spleens only slightly larger.
SubjectShapes subject_shapes(const CohortOptions& options, int index);

/// Grid dimensions that fit `spec` at the given spacing with margin.
std::array<int, 3> grid_dims_for(const geometry::SyntheticSpec& spec, double spacing_mm);

/// Writes voxels/<id>_{liver,spleen}.vox and manifest.json under `out_dir`.
Manifest generate_cohort(const CohortOptions& options, const std::filesystem::path& out_dir);

}  // namespace abdoshape::pipeline
