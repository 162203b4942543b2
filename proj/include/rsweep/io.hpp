#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsweep/geometry.hpp"
#include "rsweep/synth.hpp"

namespace rsweep {

// Portable float map. In-memory data is row-major top-down; on disk the
// rows are stored bottom-up as the format expects. The scale is pinned to
// -1.0 (little-endian).
struct PfmImage {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 ("Pf") or 3 ("PF")
  std::vector<float> data;
  float scale = -1.0f;
};

PfmImage read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const PfmImage& image);

PfmImage to_pfm(const Image& image);
Image from_pfm(const PfmImage& pfm);

// ASCII point cloud with an optional per-point "quality" property. Throws
// FiniteRequired on non-finite coordinates.
void write_ply_points(const std::filesystem::path& path, const std::vector<Vec3>& points,
                      const std::vector<double>* quality = nullptr);

struct CalibratedCamera {
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

// JSON array of per-view {fx, fy, cx, cy, width, height, rotation (9
// row-major numbers), translation (3 numbers)}. Rotations are validated to
// 1e-6 and then re-orthonormalized.
std::vector<CalibratedCamera> read_cameras(const std::filesystem::path& path);
void write_cameras(const std::filesystem::path& path,
                   const std::vector<CalibratedCamera>& cameras);

struct BenchmarkManifest {
  std::string version;
  BenchmarkConfig config;
  uint64_t seed = 0;
  double camera_distance = 0.0;
  double height_span = 0.0;
  NoiseSpec noise;  // zero sigmas when the data is clean
  std::vector<std::string> files;
};

// Reads/writes <dir>/benchmark.json. The reader checks that every listed
// file exists and that the version is supported.
BenchmarkManifest read_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const BenchmarkManifest& manifest);

// Writes the per-view rasters plus cameras.json and benchmark.json into
// dir, creating it if needed. File names: normals_XX.pfm, reflectance_XX.pfm,
// mask_XX.pfm, gt_depth_XX.pfm.
void write_benchmark(const std::filesystem::path& dir, const Benchmark& bench,
                     const NoiseSpec& noise = {});

struct LoadedBenchmark {
  BenchmarkManifest manifest;
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> poses;
  std::vector<ViewMaps> views;
};

LoadedBenchmark read_benchmark(const std::filesystem::path& dir);

// Standalone generation config files (same schema as the manifest's
// "config" object).
BenchmarkConfig read_benchmark_config(const std::filesystem::path& path);
void write_benchmark_config(const std::filesystem::path& path, const BenchmarkConfig& config);

// Adapts an on-disk benchmark to the in-memory form the sweep consumes.
Benchmark to_benchmark(const LoadedBenchmark& loaded);

}  // namespace rsweep
