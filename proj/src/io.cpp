#include "rsweep/io.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rsweep/error.hpp"

namespace rsweep {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_token(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw Error(ErrorCode::MalformedHeader, "unexpected end of header");
  return token;
}

}  // namespace

PfmImage read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

  PfmImage img;
  const std::string magic = read_token(in);
  if (magic == "PF")
    img.channels = 3;
  else if (magic == "Pf")
    img.channels = 1;
  else
    throw Error(ErrorCode::MalformedHeader, "bad magic '" + magic + "'");

  try {
    img.width = std::stoi(read_token(in));
    img.height = std::stoi(read_token(in));
    img.scale = std::stof(read_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, "bad dimensions or scale");
  }
  if (img.width <= 0 || img.height <= 0)
    throw Error(ErrorCode::MalformedHeader, "non-positive dimensions");
  if (img.scale >= 0.0f)
    throw Error(ErrorCode::UnsupportedScale, "big-endian data is not supported");
  in.get();  // single whitespace after the scale line

  img.data.resize(static_cast<size_t>(img.width) * img.height * img.channels);
  const size_t row_floats = static_cast<size_t>(img.width) * img.channels;
  // Disk order is bottom-up.
  for (int y = img.height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(img.data.data() + static_cast<size_t>(y) * row_floats),
            static_cast<std::streamsize>(row_floats * sizeof(float)));
    if (!in) throw Error(ErrorCode::TruncatedData, "file ends before raster does");
  }
  return img;
}

void write_pfm(const fs::path& path, const PfmImage& image) {
  if (image.channels != 1 && image.channels != 3)
    throw Error(ErrorCode::IoFailure, "pfm supports 1 or 3 channels");
  if (image.data.size() != static_cast<size_t>(image.width) * image.height * image.channels)
    throw Error(ErrorCode::IoFailure, "data length does not match dimensions");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << (image.channels == 3 ? "PF" : "Pf") << "\n"
      << image.width << " " << image.height << "\n"
      << "-1.0\n";
  const size_t row_floats = static_cast<size_t>(image.width) * image.channels;
  for (int y = image.height - 1; y >= 0; --y) {
    out.write(
        reinterpret_cast<const char*>(image.data.data() + static_cast<size_t>(y) * row_floats),
        static_cast<std::streamsize>(row_floats * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

PfmImage to_pfm(const Image& image) {
  PfmImage out;
  out.width = image.width;
  out.height = image.height;
  out.channels = image.channels;
  out.data = image.data;
  return out;
}

Image from_pfm(const PfmImage& pfm) {
  Image out(pfm.width, pfm.height, pfm.channels);
  out.data = pfm.data;
  return out;
}

void write_ply_points(const fs::path& path, const std::vector<Vec3>& points,
                      const std::vector<double>* quality) {
  if (quality && quality->size() != points.size())
    throw Error(ErrorCode::IoFailure, "quality size does not match point count");
  for (const Vec3& p : points)
    if (!p.allFinite())
      throw Error(ErrorCode::FiniteRequired, "point cloud contains non-finite coordinates");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (quality) out << "property float quality\n";
  out << "end_header\n";

  char line[160];
  for (size_t i = 0; i < points.size(); ++i) {
    if (quality)
      std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %.9g\n", points[i].x(), points[i].y(),
                    points[i].z(), (*quality)[i]);
    else
      std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n", points[i].x(), points[i].y(),
                    points[i].z());
    out << line;
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("invalid json: ") + e.what());
  }
  return j;
}

void save_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

template <typename T>
T require(const json& j, const char* field) {
  if (!j.contains(field))
    throw Error(ErrorCode::SchemaError, std::string("missing field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::SchemaError, std::string("bad type for field '") + field + "'");
  }
}

}  // namespace

std::vector<CalibratedCamera> read_cameras(const fs::path& path) {
  const json root = load_json(path);
  if (!root.is_array()) throw Error(ErrorCode::SchemaError, "cameras file must be an array");

  std::vector<CalibratedCamera> cameras;
  for (const json& view : root) {
    CalibratedCamera cam;
    cam.intrinsics.fx = require<double>(view, "fx");
    cam.intrinsics.fy = require<double>(view, "fy");
    cam.intrinsics.cx = require<double>(view, "cx");
    cam.intrinsics.cy = require<double>(view, "cy");
    cam.intrinsics.width = require<int>(view, "width");
    cam.intrinsics.height = require<int>(view, "height");
    validate_intrinsics(cam.intrinsics);

    const auto rot = require<std::vector<double>>(view, "rotation");
    const auto trans = require<std::vector<double>>(view, "translation");
    if (rot.size() != 9 || trans.size() != 3)
      throw Error(ErrorCode::SchemaError, "rotation must have 9 numbers, translation 3");
    Mat3 R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) R(r, c) = rot[3 * r + c];
    const Vec3 t(trans[0], trans[1], trans[2]);

    const double dev = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (dev > 1e-6 || R.determinant() < 0.0)
      throw Error(ErrorCode::NonRigidRotation, "rotation is not orthonormal to 1e-6");
    // Snap to the nearest rotation.
    Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 snapped = svd.matrixU() * svd.matrixV().transpose();
    if (snapped.determinant() < 0.0) {
      Mat3 flip = Mat3::Identity();
      flip(2, 2) = -1.0;
      snapped = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    cam.pose.rotation = snapped;
    cam.pose.translation = t;
    validate_pose(cam.pose);
    cameras.push_back(cam);
  }
  return cameras;
}

void write_cameras(const fs::path& path, const std::vector<CalibratedCamera>& cameras) {
  json root = json::array();
  for (const CalibratedCamera& cam : cameras) {
    json view;
    view["fx"] = cam.intrinsics.fx;
    view["fy"] = cam.intrinsics.fy;
    view["cx"] = cam.intrinsics.cx;
    view["cy"] = cam.intrinsics.cy;
    view["width"] = cam.intrinsics.width;
    view["height"] = cam.intrinsics.height;
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot[3 * r + c] = cam.pose.rotation(r, c);
    view["rotation"] = rot;
    view["translation"] = std::vector<double>{
        cam.pose.translation.x(), cam.pose.translation.y(), cam.pose.translation.z()};
    root.push_back(view);
  }
  save_json(path, root);
}

namespace {

json config_to_json(const BenchmarkConfig& config) {
  json j;
  j["version"] = config.version;
  j["width"] = config.width;
  j["height"] = config.height;
  j["fx"] = config.fx;
  j["fy"] = config.fy;
  j["cx"] = config.cx;
  j["cy"] = config.cy;
  j["view_count"] = config.view_count;
  j["ring_radius"] = config.ring_radius;
  j["elevation_deg"] = config.elevation_deg;
  json bumps = json::array();
  for (const GaussianBump& b : config.surface.bumps) {
    bumps.push_back({{"amplitude", b.amplitude},
                     {"center", {b.center_x, b.center_y}},
                     {"sigma", b.sigma}});
  }
  j["surface"] = {{"base_depth", config.surface.base_depth},
                  {"bumps", bumps},
                  {"support",
                   {config.surface.support_min_x, config.surface.support_min_y,
                    config.surface.support_max_x, config.surface.support_max_y}}};
  j["reflectance"] = {{"knots", config.reflectance.knots},
                      {"x0", config.reflectance.x0},
                      {"x1", config.reflectance.x1}};
  j["seed"] = config.seed;
  return j;
}

BenchmarkConfig config_from_json(const json& j) {
  BenchmarkConfig config;
  config.version = require<std::string>(j, "version");
  config.width = require<int>(j, "width");
  config.height = require<int>(j, "height");
  config.fx = require<double>(j, "fx");
  config.fy = require<double>(j, "fy");
  config.cx = require<double>(j, "cx");
  config.cy = require<double>(j, "cy");
  config.view_count = require<int>(j, "view_count");
  config.ring_radius = require<double>(j, "ring_radius");
  config.elevation_deg = require<double>(j, "elevation_deg");
  const json surface = require<json>(j, "surface");
  config.surface.base_depth = require<double>(surface, "base_depth");
  const json bumps = require<json>(surface, "bumps");
  if (!bumps.is_array() || bumps.size() != 2)
    throw Error(ErrorCode::SchemaError, "surface must list exactly 2 bumps");
  for (int i = 0; i < 2; ++i) {
    config.surface.bumps[i].amplitude = require<double>(bumps[i], "amplitude");
    const auto center = require<std::vector<double>>(bumps[i], "center");
    if (center.size() != 2) throw Error(ErrorCode::SchemaError, "bump center must be 2 numbers");
    config.surface.bumps[i].center_x = center[0];
    config.surface.bumps[i].center_y = center[1];
    config.surface.bumps[i].sigma = require<double>(bumps[i], "sigma");
    if (!(config.surface.bumps[i].sigma > 0.0))
      throw Error(ErrorCode::SchemaError, "bump sigma must be positive");
  }
  const auto support = require<std::vector<double>>(surface, "support");
  if (support.size() != 4)
    throw Error(ErrorCode::SchemaError, "support must be [min_x, min_y, max_x, max_y]");
  config.surface.support_min_x = support[0];
  config.surface.support_min_y = support[1];
  config.surface.support_max_x = support[2];
  config.surface.support_max_y = support[3];
  const json refl = require<json>(j, "reflectance");
  const auto knots = require<std::vector<double>>(refl, "knots");
  if (knots.size() != 5) throw Error(ErrorCode::SchemaError, "reflectance needs 5 knots");
  for (int i = 0; i < 5; ++i) config.reflectance.knots[i] = knots[i];
  config.reflectance.x0 = require<double>(refl, "x0");
  config.reflectance.x1 = require<double>(refl, "x1");
  config.seed = require<uint64_t>(j, "seed");
  return config;
}

std::string view_file(const char* stem, size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02zu.pfm", stem, index);
  return buf;
}

}  // namespace

BenchmarkManifest read_manifest(const fs::path& dir) {
  const json j = load_json(dir / "benchmark.json");
  BenchmarkManifest manifest;
  manifest.version = require<std::string>(j, "version");
  if (manifest.version != "1")
    throw Error(ErrorCode::SchemaError, "unsupported benchmark version " + manifest.version);
  manifest.config = config_from_json(require<json>(j, "config"));
  manifest.seed = require<uint64_t>(j, "seed");
  manifest.camera_distance = require<double>(j, "camera_distance");
  manifest.height_span = require<double>(j, "height_span");
  const json noise = require<json>(j, "noise");
  manifest.noise.normal_sigma_deg = require<double>(noise, "normal_sigma_deg");
  manifest.noise.reflectance_sigma_frac = require<double>(noise, "reflectance_sigma_frac");
  manifest.noise.seed = require<uint64_t>(noise, "seed");
  manifest.files = require<std::vector<std::string>>(j, "files");
  for (const std::string& f : manifest.files)
    if (!fs::exists(dir / f))
      throw Error(ErrorCode::SchemaError, "manifest lists missing file " + f);
  return manifest;
}

void write_manifest(const fs::path& dir, const BenchmarkManifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["config"] = config_to_json(manifest.config);
  j["seed"] = manifest.seed;
  j["camera_distance"] = manifest.camera_distance;
  j["height_span"] = manifest.height_span;
  j["noise"] = {{"normal_sigma_deg", manifest.noise.normal_sigma_deg},
                {"reflectance_sigma_frac", manifest.noise.reflectance_sigma_frac},
                {"seed", manifest.noise.seed}};
  j["files"] = manifest.files;
  save_json(dir / "benchmark.json", j);
}

void write_benchmark(const fs::path& dir, const Benchmark& bench, const NoiseSpec& noise) {
  fs::create_directories(dir);

  BenchmarkManifest manifest;
  manifest.version = "1";
  manifest.config = bench.config;
  manifest.seed = bench.config.seed;
  manifest.camera_distance = bench.camera_distance;
  manifest.height_span = bench.height_span;
  manifest.noise = noise;

  std::vector<CalibratedCamera> cameras;
  for (size_t i = 0; i < bench.views.size(); ++i) {
    const ViewMaps& maps = bench.views[i];
    write_pfm(dir / view_file("normals", i), to_pfm(maps.normals));
    write_pfm(dir / view_file("reflectance", i), to_pfm(maps.reflectance));
    Image mask_img(maps.width(), maps.height(), 1);
    for (size_t p = 0; p < maps.mask.size(); ++p)
      mask_img.data[p] = maps.mask[p] ? 1.0f : 0.0f;
    write_pfm(dir / view_file("mask", i), to_pfm(mask_img));
    write_pfm(dir / view_file("gt_depth", i), to_pfm(*maps.gt_depth));
    manifest.files.push_back(view_file("normals", i));
    manifest.files.push_back(view_file("reflectance", i));
    manifest.files.push_back(view_file("mask", i));
    manifest.files.push_back(view_file("gt_depth", i));
    cameras.push_back(CalibratedCamera{bench.intrinsics, bench.poses[i]});
  }
  write_cameras(dir / "cameras.json", cameras);
  manifest.files.push_back("cameras.json");
  write_manifest(dir, manifest);
}

BenchmarkConfig read_benchmark_config(const fs::path& path) {
  return config_from_json(load_json(path));
}

void write_benchmark_config(const fs::path& path, const BenchmarkConfig& config) {
  save_json(path, config_to_json(config));
}

Benchmark to_benchmark(const LoadedBenchmark& loaded) {
  Benchmark bench;
  bench.config = loaded.manifest.config;
  bench.intrinsics = loaded.intrinsics;
  bench.poses = loaded.poses;
  bench.views = loaded.views;
  bench.camera_distance = loaded.manifest.camera_distance;
  bench.height_span = loaded.manifest.height_span;
  return bench;
}

LoadedBenchmark read_benchmark(const fs::path& dir) {
  LoadedBenchmark loaded;
  loaded.manifest = read_manifest(dir);
  const std::vector<CalibratedCamera> cameras = read_cameras(dir / "cameras.json");
  if (cameras.empty()) throw Error(ErrorCode::SchemaError, "benchmark has no cameras");
  loaded.intrinsics = cameras[0].intrinsics;

  for (size_t i = 0; i < cameras.size(); ++i) {
    ViewMaps maps;
    maps.normals = from_pfm(read_pfm(dir / view_file("normals", i)));
    maps.reflectance = from_pfm(read_pfm(dir / view_file("reflectance", i)));
    const Image mask_img = from_pfm(read_pfm(dir / view_file("mask", i)));
    maps.mask.resize(mask_img.pixel_count());
    for (size_t p = 0; p < maps.mask.size(); ++p)
      maps.mask[p] = mask_img.data[p] > 0.5f ? 1 : 0;
    maps.gt_depth = from_pfm(read_pfm(dir / view_file("gt_depth", i)));
    loaded.poses.push_back(cameras[i].pose);
    loaded.views.push_back(std::move(maps));
  }
  return loaded;
}

}  // namespace rsweep
