#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "rsweep/io.hpp"
#include "test_helpers.hpp"

using namespace rsweep;
using namespace rsweep::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rsweep_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("pfm: bit-exact round trip") {
  TempDir tmp;
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<float> value(-10.0f, 10.0f);

  SUBCASE("1x1 single channel") {
    PfmImage img;
    img.width = img.height = 1;
    img.channels = 1;
    img.data = {0.5f};
    write_pfm(tmp.path / "a.pfm", img);
    const PfmImage back = read_pfm(tmp.path / "a.pfm");
    CHECK(back.width == 1);
    CHECK(back.channels == 1);
    CHECK(back.data[0] == 0.5f);
  }

  SUBCASE("3-channel raster with NaNs") {
    PfmImage img;
    img.width = 17;
    img.height = 9;
    img.channels = 3;
    img.data.resize(17 * 9 * 3);
    for (float& v : img.data) v = value(rng);
    img.data[5] = std::numeric_limits<float>::quiet_NaN();
    write_pfm(tmp.path / "b.pfm", img);
    const PfmImage back = read_pfm(tmp.path / "b.pfm");
    REQUIRE(back.data.size() == img.data.size());
    CHECK(std::memcmp(back.data.data(), img.data.data(),
                      img.data.size() * sizeof(float)) == 0);
  }

  SUBCASE("deterministic writer") {
    PfmImage img;
    img.width = 8;
    img.height = 8;
    img.channels = 1;
    img.data.resize(64);
    for (float& v : img.data) v = value(rng);
    write_pfm(tmp.path / "c1.pfm", img);
    write_pfm(tmp.path / "c2.pfm", img);
    CHECK(slurp(tmp.path / "c1.pfm") == slurp(tmp.path / "c2.pfm"));
  }
}

TEST_CASE("pfm: malformed inputs") {
  TempDir tmp;

  SUBCASE("bad magic") {
    std::ofstream(tmp.path / "bad.pfm") << "P6\n2 2\n-1.0\n";
    CHECK_THROWS_AS(read_pfm(tmp.path / "bad.pfm"), Error);
  }

  SUBCASE("truncated data") {
    PfmImage img;
    img.width = 4;
    img.height = 4;
    img.channels = 1;
    img.data.assign(16, 1.0f);
    write_pfm(tmp.path / "t.pfm", img);
    const std::vector<char> bytes = slurp(tmp.path / "t.pfm");
    std::ofstream out(tmp.path / "t.pfm", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    out.close();
    try {
      read_pfm(tmp.path / "t.pfm");
      FAIL("expected TruncatedData");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TruncatedData);
    }
  }

  SUBCASE("positive scale (big-endian) unsupported") {
    std::ofstream out(tmp.path / "s.pfm", std::ios::binary);
    out << "Pf\n1 1\n1.0\n";
    const float v = 1.0f;
    out.write(reinterpret_cast<const char*>(&v), 4);
    out.close();
    try {
      read_pfm(tmp.path / "s.pfm");
      FAIL("expected UnsupportedScale");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedScale);
    }
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_pfm(tmp.path / "nope.pfm"), Error);
  }
}

TEST_CASE("ply: header, empty cloud, and NaN rejection") {
  TempDir tmp;

  SUBCASE("empty cloud") {
    write_ply_points(tmp.path / "empty.ply", {});
    const std::vector<char> bytes = slurp(tmp.path / "empty.ply");
    const std::string text(bytes.begin(), bytes.end());
    CHECK(text.find("element vertex 0") != std::string::npos);
  }

  SUBCASE("single point with quality") {
    const std::vector<Vec3> pts{Vec3(1, 2, 3)};
    const std::vector<double> quality{0.25};
    write_ply_points(tmp.path / "one.ply", pts, &quality);
    const std::vector<char> bytes = slurp(tmp.path / "one.ply");
    const std::string text(bytes.begin(), bytes.end());
    CHECK(text.find("element vertex 1") != std::string::npos);
    CHECK(text.find("property float quality") != std::string::npos);
    CHECK(text.find("1 2 3 0.25") != std::string::npos);
  }

  SUBCASE("NaN point rejected") {
    const std::vector<Vec3> pts{Vec3(0, 0, std::numeric_limits<double>::quiet_NaN())};
    try {
      write_ply_points(tmp.path / "nan.ply", pts);
      FAIL("expected FiniteRequired");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FiniteRequired);
    }
  }
}

TEST_CASE("cameras: round trip, validation, and re-orthonormalization") {
  TempDir tmp;
  std::mt19937_64 rng(89);

  std::vector<CalibratedCamera> cams;
  for (int i = 0; i < 3; ++i) {
    CalibratedCamera cam;
    cam.intrinsics = CameraIntrinsics{400, 410, 127.5, 128.5, 256, 257};
    cam.pose.rotation = random_rotation(rng);
    cam.pose.translation = Vec3(0.1 * i, -0.2, 1.5);
    cams.push_back(cam);
  }
  write_cameras(tmp.path / "cameras.json", cams);
  const std::vector<CalibratedCamera> back = read_cameras(tmp.path / "cameras.json");
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK((back[i].pose.rotation - cams[i].pose.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((back[i].pose.translation - cams[i].pose.translation).norm() < 1e-12);
    CHECK(back[i].intrinsics.fy == cams[i].intrinsics.fy);
  }

  SUBCASE("slightly off-orthonormal rotations are snapped") {
    CalibratedCamera cam = cams[0];
    cam.pose.rotation(0, 1) += 4e-7;
    write_cameras(tmp.path / "near.json", {cam});
    const std::vector<CalibratedCamera> snapped = read_cameras(tmp.path / "near.json");
    validate_pose(snapped[0].pose, 1e-9);
  }

  SUBCASE("clearly non-rigid rotations are rejected") {
    CalibratedCamera cam = cams[0];
    cam.pose.rotation(0, 0) += 0.1;
    write_cameras(tmp.path / "bad.json", {cam});
    try {
      read_cameras(tmp.path / "bad.json");
      FAIL("expected NonRigidRotation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonRigidRotation);
    }
  }

  SUBCASE("missing fields are schema errors") {
    std::ofstream(tmp.path / "schema.json") << R"([{"fx": 1.0}])";
    CHECK_THROWS_AS(read_cameras(tmp.path / "schema.json"), Error);
  }
}

TEST_CASE("benchmark directory round trip") {
  TempDir tmp;
  BenchmarkConfig config = default_benchmark_config();
  config.width = 24;
  config.height = 24;
  config.fx = config.fy = 40.0;
  config.cx = config.cy = 11.5;
  config.view_count = 2;
  const Benchmark bench = generate_benchmark(config);
  write_benchmark(tmp.path / "bench", bench);

  const LoadedBenchmark loaded = read_benchmark(tmp.path / "bench");
  CHECK(loaded.manifest.version == "1");
  CHECK(loaded.manifest.config.width == 24);
  CHECK(loaded.views.size() == 2);
  CHECK(loaded.manifest.camera_distance == doctest::Approx(bench.camera_distance));
  CHECK(loaded.manifest.height_span == doctest::Approx(bench.height_span));
  for (size_t i = 0; i < 2; ++i) {
    CHECK(loaded.views[i].mask == bench.views[i].mask);
    CHECK(std::memcmp(loaded.views[i].normals.data.data(),
                      bench.views[i].normals.data.data(),
                      bench.views[i].normals.data.size() * sizeof(float)) == 0);
    CHECK((loaded.poses[i].rotation - bench.poses[i].rotation).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("manifest with a missing file is rejected") {
    fs::remove(tmp.path / "bench" / "normals_01.pfm");
    CHECK_THROWS_AS(read_manifest(tmp.path / "bench"), Error);
  }
}

TEST_CASE("benchmark config file round trip") {
  TempDir tmp;
  BenchmarkConfig config = default_benchmark_config();
  config.seed = 77;
  config.surface.bumps[1].sigma = 0.4;
  write_benchmark_config(tmp.path / "config.json", config);
  const BenchmarkConfig back = read_benchmark_config(tmp.path / "config.json");
  CHECK(back.seed == 77);
  CHECK(back.surface.bumps[1].sigma == doctest::Approx(0.4));
  CHECK(back.width == config.width);
  CHECK(back.reflectance.knots == config.reflectance.knots);
}
