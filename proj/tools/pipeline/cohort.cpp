#include "pipeline/cohort.hpp"

#include <cmath>
#include <cstdio>

#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::pipeline {

namespace {

// Class-0 means and per-subject spread (mm unless noted).
const geometry::Vec3 kLiverAxes{30.0, 22.0, 17.0};
const geometry::Vec3 kSpleenAxes{20.0, 12.0, 10.0};
constexpr double kAxisJitter = 0.06;  // relative, per axis

// Class-1 shifts at separation 1.
constexpr double kLiverScaleShift = 0.06;
constexpr double kLiverBumpShift = 3.0;
constexpr double kSpleenScaleShift = 0.03;

geometry::Vec3 jittered(const geometry::Vec3& axes, double scale, Rng& rng) {
  geometry::Vec3 out;
  for (int d = 0; d < 3; ++d) out[d] = axes[d] * scale * (1.0 + kAxisJitter * rng.normal());
  return out;
}

geometry::Vec3 near_direction(const geometry::Vec3& dir, double spread, Rng& rng) {
  geometry::Vec3 v = dir + spread * geometry::Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

std::string subject_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "subj%04d", index);
  return buf;
}

}  // namespace

SubjectShapes subject_shapes(const CohortOptions& options, int index) {
  Rng rng(options.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index) + 1);
  const int label = index % 2;
  const double s = label == 1 ? options.separation : 0.0;

  SubjectShapes out;
  out.liver.label = label;
  out.liver.semi_axes = jittered(kLiverAxes, 1.0 + kLiverScaleShift * s, rng);
  out.liver.bump_amplitude = std::max(0.0, 2.0 + kLiverBumpShift * s + 1.0 * rng.normal());
  out.liver.bump_width = 0.5;
  out.liver.bump_direction = near_direction(geometry::Vec3(1.0, 0.3, 0.2), 0.1, rng);
  out.liver.noise_amplitude = 0.04;
  out.liver.seed = rng.next();

  out.spleen.label = label;
  out.spleen.semi_axes = jittered(kSpleenAxes, 1.0 + kSpleenScaleShift * s, rng);
  out.spleen.bump_amplitude = std::max(0.0, 1.0 + 0.5 * rng.normal());
  out.spleen.bump_width = 0.6;
  out.spleen.bump_direction = near_direction(geometry::Vec3(0.0, 1.0, 0.0), 0.1, rng);
  out.spleen.noise_amplitude = 0.04;
  out.spleen.seed = rng.next();
  return out;
}

std::array<int, 3> grid_dims_for(const geometry::SyntheticSpec& spec, double spacing_mm) {
  const int half = static_cast<int>(std::ceil(geometry::max_extent(spec) / spacing_mm)) + 3;
  const int n = 2 * half + 1;
  return {n, n, n};
}

Manifest generate_cohort(const CohortOptions& options, const std::filesystem::path& out_dir) {
  if (options.per_class < 2) throw InvalidArgument("gen-cohort needs at least 2 subjects per class");
  if (!(options.separation >= 0.0)) throw InvalidArgument("class separation must be >= 0");
  if (!(options.spacing_mm > 0.0)) throw InvalidArgument("voxel spacing must be > 0");
  std::filesystem::create_directories(out_dir / "voxels");

  Manifest manifest;
  manifest.name = options.name;
  manifest.seed = options.seed;
  manifest.base_dir = out_dir;
  const std::array<double, 3> spacing{options.spacing_mm, options.spacing_mm, options.spacing_mm};
  for (int i = 0; i < 2 * options.per_class; ++i) {
    const auto shapes = subject_shapes(options, i);
    ManifestSubject subject;
    subject.id = subject_id(i);
    subject.label = shapes.liver.label;
    subject.liver = "voxels/" + subject.id + "_liver.vox";
    subject.spleen = "voxels/" + subject.id + "_spleen.vox";
    geometry::write_voxels(out_dir / subject.liver,
                           geometry::generate_synthetic(shapes.liver, grid_dims_for(shapes.liver, options.spacing_mm),
                                                        spacing));
    geometry::write_voxels(out_dir / subject.spleen,
                           geometry::generate_synthetic(shapes.spleen,
                                                        grid_dims_for(shapes.spleen, options.spacing_mm), spacing));
    manifest.subjects.push_back(std::move(subject));
  }
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace abdoshape::pipeline
