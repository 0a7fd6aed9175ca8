#include "so3net/data_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "so3net/so3fft.hpp"
#include "so3net/spectral_ops.hpp"
#include "test_util.hpp"

using namespace so3net;
using namespace so3net::data;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  return (fs::path(testing::TempDir()) / name).string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(GridFieldFile, RoundTripBitExact) {
  Rng rng(1);
  SphereField f = SphereField::vector_field(9, 8);
  for (int k = 1; k < 8; ++k)
    for (int j = 0; j < 8; ++j) {
      f.u[f.node(k, j)] = rng.normal();
      f.v[f.node(k, j)] = rng.normal();
    }
  const std::string path = tmp_path("field.so3g");
  write_grid_field(path, f);
  const SphereField g = read_grid_field(path);
  EXPECT_EQ(g.kind, FieldKind::kVector);
  ASSERT_TRUE(g.same_grid(f));
  for (size_t i = 0; i < f.u.size(); ++i) {
    EXPECT_EQ(f.u[i], g.u[i]);
    EXPECT_EQ(f.v[i], g.v[i]);
  }

  SphereField s = SphereField::scalar_field(5, 6);
  for (double& t : s.t) t = rng.normal();
  const std::string spath = tmp_path("scalar.so3g");
  write_grid_field(spath, s);
  const SphereField s2 = read_grid_field(spath);
  EXPECT_EQ(s2.kind, FieldKind::kScalar);
  for (size_t i = 0; i < s.t.size(); ++i) EXPECT_EQ(s.t[i], s2.t[i]);
}

TEST(GridFieldFile, DistinctErrorCodes) {
  const std::string path = tmp_path("bad.so3g");
  SphereField f = SphereField::scalar_field(3, 4);
  write_grid_field(path, f);

  std::string bytes = file_bytes(path);
  bytes[0] = 'X';
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
  try {
    read_grid_field(path);
    FAIL() << "expected magic mismatch";
  } catch (const FileFormatError& e) {
    EXPECT_EQ(e.code, FileErrorCode::kMagic);
  }

  bytes[0] = 'S';
  std::ofstream(path, std::ios::binary | std::ios::trunc)
      << bytes.substr(0, bytes.size() - 5);
  try {
    read_grid_field(path);
    FAIL() << "expected size mismatch";
  } catch (const FileFormatError& e) {
    EXPECT_EQ(e.code, FileErrorCode::kSize);
  }

  bytes[4] = 9;  // version
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
  try {
    read_grid_field(path);
    FAIL() << "expected version mismatch";
  } catch (const FileFormatError& e) {
    EXPECT_EQ(e.code, FileErrorCode::kVersion);
  }

  try {
    read_grid_field(tmp_path("does_not_exist.so3g"));
    FAIL() << "expected unreadable";
  } catch (const FileFormatError& e) {
    EXPECT_EQ(e.code, FileErrorCode::kUnreadable);
  }
}

TEST(GridFieldFile, CsvImport) {
  const std::string path = tmp_path("wind.csv");
  {
    std::ofstream csv(path);
    csv << "lon,lat,u,v\n";
    for (double lat : {90.0, 0.0, -90.0})
      for (double lon : {0.0, 120.0, 240.0})
        csv << lon << ',' << lat << ',' << (lon + lat) << ',' << (lon - lat) << "\n";
  }
  const SphereField f = read_csv_field(path);
  EXPECT_EQ(f.kind, FieldKind::kVector);
  EXPECT_EQ(f.n_lat, 3);
  EXPECT_EQ(f.n_lon, 3);
  // Row 0 is the north pole (+90), which is zeroed; the equator row keeps
  // the parsed values.
  EXPECT_EQ(f.u[f.node(0, 0)], 0.0);
  EXPECT_EQ(f.u[f.node(1, 1)], 120.0);
  EXPECT_EQ(f.v[f.node(1, 2)], 240.0);

  const std::string bad = tmp_path("bad.csv");
  std::ofstream(bad) << "lon,lat,speed\n";
  EXPECT_THROW(read_csv_field(bad), IoError);
}

TEST(Checkpoint, RoundTripReproducesForward) {
  nn::UNetConfig cfg;
  cfg.band_limit = 4;
  cfg.depth = 1;
  cfg.channels = {3, 4};
  cfg.p = cfg.q = cfg.hidden_order = 1;
  nn::UNetModel model = nn::UNetModel::create(cfg, 17);
  model.input_scale = 2.5;
  model.target_scale = 0.75;

  const std::string path = tmp_path("model.so3n");
  write_checkpoint(path, model);
  const nn::UNetModel loaded = read_checkpoint(path);
  EXPECT_EQ(loaded.input_scale, 2.5);
  EXPECT_EQ(loaded.target_scale, 0.75);

  Rng rng(3);
  const SpectralSignal x = testutil::random_spectrum(4, rng, 1);
  const nn::ChannelSignals a = nn::unet_forward(model, {x});
  const nn::ChannelSignals b = nn::unet_forward(loaded, {x});
  for (size_t i = 0; i < a[0].coeffs.size(); ++i) EXPECT_EQ(a[0].coeffs[i], b[0].coeffs[i]);

  // save -> load -> save is byte-identical.
  const std::string path2 = tmp_path("model2.so3n");
  write_checkpoint(path2, loaded);
  EXPECT_EQ(file_bytes(path), file_bytes(path2));

  // Parameter count guard.
  std::string bytes = file_bytes(path);
  bytes.resize(bytes.size() - 8);
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
  EXPECT_THROW(read_checkpoint(path), IoError);
}

TEST(RandomBandlimited, DeterministicRealAndDecayLimits) {
  const SpectralSignal a = random_bandlimited(42, 5, 1, 1.0);
  const SpectralSignal b = random_bandlimited(42, 5, 1, 1.0);
  for (size_t i = 0; i < a.coeffs.size(); ++i) EXPECT_EQ(a.coeffs[i], b.coeffs[i]);
  EXPECT_EQ(*a.order, 1);
  EXPECT_EQ(a.off_column_residue(1), 0.0);

  // Scalar-type signals satisfy the reality symmetry and synthesize to a
  // real spatial signal.
  const SpectralSignal r = random_bandlimited(7, 4, 0, 0.5);
  auto plan = FftPlan::create(4);
  const SpatialSignalSO3 xs = ift_fast(r, *plan);
  double max_imag = 0.0, max_abs = 0.0;
  for (const cplx& s : xs.samples) {
    max_imag = std::max(max_imag, std::abs(s.imag()));
    max_abs = std::max(max_abs, std::abs(s));
  }
  EXPECT_LT(max_imag, 1e-10 * max_abs);

  // Extreme decay keeps only l = 0: a constant signal.
  const SpectralSignal c = random_bandlimited(9, 4, 0, 1e6);
  const SpatialSignalSO3 cs = ift_fast(c, *plan);
  for (const cplx& s : cs.samples) EXPECT_LT(std::abs(s - cs.samples[0]), 1e-14);
}

TEST(SyntheticTask, AutoencodeAndTeacherEquivariance) {
  SyntheticTask task;
  task.kind = TaskKind::kAutoencode;
  task.band_limit = 4;
  task.samples = 3;
  const nn::Dataset auto_data = make_dataset(task, 11);
  ASSERT_EQ(auto_data.size(), 3u);
  for (const nn::Sample& s : auto_data)
    for (size_t i = 0; i < s.input.coeffs.size(); ++i)
      EXPECT_EQ(s.input.coeffs[i], s.target.coeffs[i]);

  task.kind = TaskKind::kWind2Wind;
  const std::vector<nn::ConvLayer> teacher = make_teacher(task);
  Rng rng(5);
  const SpectralSignal x = random_bandlimited(1234, 4, 1, 1.0);
  const RotationMatrix b = random_rotation(rng);
  const SpectralSignal lhs = apply_teacher(teacher, rotate_spectral(x, b));
  const SpectralSignal rhs = rotate_spectral(apply_teacher(teacher, x), b);
  EXPECT_LT(testutil::rel_coeff_err(lhs, rhs), 1e-6);

  task.kind = TaskKind::kTemp2Wind;
  const nn::Dataset mixed = make_dataset(task, 13);
  EXPECT_EQ(*mixed[0].input.order, 0);
  EXPECT_EQ(*mixed[0].target.order, 1);
}

TEST(Augment, RotationPreservesNormAndInverts) {
  SyntheticTask task;
  task.band_limit = 5;
  task.samples = 1;
  const nn::Dataset data = make_dataset(task, 21);
  const nn::Sample rotated = augment_rotate(data[0], 77);
  EXPECT_NEAR(parseval_norm_sq(rotated.input), parseval_norm_sq(data[0].input),
              1e-10 * parseval_norm_sq(data[0].input));
  EXPECT_EQ(*rotated.input.order, 1);

  // Applying the inverse rotation restores the sample.
  Rng rng(77);
  const RotationMatrix b = random_rotation(rng);
  const SpectralSignal back = rotate_spectral(rotated.input, b.transposed());
  EXPECT_LT(testutil::rel_coeff_err(back, data[0].input), 1e-10);

  // Identity rotation path: rotating by I leaves the pair untouched.
  const SpectralSignal same = rotate_spectral(data[0].input, RotationMatrix::identity());
  EXPECT_LT(testutil::max_coeff_diff(same, data[0].input), 1e-13);
}
