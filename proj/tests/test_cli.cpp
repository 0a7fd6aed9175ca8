#include "so3net/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "so3net/so3fft.hpp"
#include "so3net/spectral_ops.hpp"

using namespace so3net;
using namespace so3net::cli;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  return (fs::path(testing::TempDir()) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A band-limited vector field written on the default grid for band limit L.
SphereField make_test_field(int L, std::uint64_t seed) {
  auto plan = FftPlan::create(L);
  const SpectralSignal xhat = data::random_bandlimited(seed, L, 1, 1.0);
  return extract_vector(ift_fast(xhat, *plan));
}

double field_max_diff(const SphereField& a, const SphereField& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.u.size(); ++i) {
    worst = std::max(worst, std::abs(a.u[i] - b.u[i]));
    worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
  }
  return worst;
}

}  // namespace

TEST(RunConfig, ParsesAndRejects) {
  const std::string path = tmp_path("run.cfg");
  write_text(path,
             "# comment\n"
             "band_limit=6\n"
             "depth=2\n"
             "channels=4,8,12\n"
             "task=temp2wind\n"
             "epochs=5\n"
             "lr=0.002\n"
             "seed=9\n"
             "augment=rotate\n"
             "samples=20\n"
             "val_samples=4\n"
             "noise=0.1\n"
             "output_dir=" +
                 tmp_path("out") + "\n");
  const RunConfig cfg = RunConfig::parse_file(path);
  EXPECT_EQ(cfg.band_limit, 6);
  EXPECT_EQ(cfg.depth, 2);
  EXPECT_EQ(cfg.channels, (std::vector<int>{4, 8, 12}));
  EXPECT_EQ(cfg.task, "temp2wind");
  EXPECT_EQ(cfg.epochs, 5);
  EXPECT_DOUBLE_EQ(cfg.lr, 0.002);
  EXPECT_EQ(cfg.augment, "rotate");
  cfg.validate();

  write_text(path, "band_limit=6\nlearning_rate=0.1\n");
  EXPECT_THROW(RunConfig::parse_file(path), ConfigError);
  write_text(path, "band_limit=abc\n");
  EXPECT_THROW(RunConfig::parse_file(path), ConfigError);

  RunConfig bad;
  bad.output_dir = "";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.output_dir = "x";
  bad.augment = "flip";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.augment = "none";
  bad.task = "wavelets";
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Selftest, PassesAndDegenerateBandLimit) {
  std::ostringstream out;
  EXPECT_EQ(cmd_selftest(4, 1, false, out), kExitOk);
  EXPECT_NE(out.str().find("all checks passed"), std::string::npos);

  std::ostringstream out0;
  EXPECT_EQ(cmd_selftest(0, 1, false, out0), kExitOk);
}

TEST(Selftest, CorruptDeltaHookFailsNamedCheck) {
  std::ostringstream out;
  EXPECT_EQ(cmd_selftest(4, 1, true, out), kExitNumeric);
  EXPECT_NE(out.str().find("delta-orthogonality"), std::string::npos);
}

TEST(Rotate, ZeroAnglesIsIdentityAndInverseRestores) {
  const int L = 4;
  const SphereField field = make_test_field(L, 31);
  const std::string in = tmp_path("rot_in.so3g");
  const std::string mid = tmp_path("rot_mid.so3g");
  const std::string back = tmp_path("rot_back.so3g");
  data::write_grid_field(in, field);

  std::ostringstream out;
  ASSERT_EQ(cmd_rotate(in, 0.0, 0.0, 0.0, mid, out), kExitOk);
  EXPECT_LT(field_max_diff(data::read_grid_field(mid), field), 1e-9);

  const double a = 0.7, b = 1.1, g = -0.4;
  ASSERT_EQ(cmd_rotate(in, a, b, g, mid, out), kExitOk);
  const EulerAngles inv = matrix_to_euler(euler_to_matrix(a, b, g).transposed());
  ASSERT_EQ(cmd_rotate(mid, inv.alpha, inv.beta, inv.gamma, back, out), kExitOk);
  EXPECT_LT(field_max_diff(data::read_grid_field(back), field), 1e-8);
}

TEST(TrainPredict, SmallRunIsDeterministicAndPredicts) {
  const std::string out_dir1 = tmp_path("run1");
  const std::string out_dir2 = tmp_path("run2");
  const std::string cfg_path = tmp_path("train.cfg");

  auto config_for = [&](const std::string& dir) {
    return std::string("band_limit=3\ndepth=0\nchannels=3\ntask=wind2wind\nepochs=2\n") +
           "lr=0.001\nseed=4\nsamples=6\nval_samples=3\noutput_dir=" + dir + "\n";
  };

  std::ostringstream log;
  write_text(cfg_path, config_for(out_dir1));
  ASSERT_EQ(cmd_train(cfg_path, log), kExitOk);
  write_text(cfg_path, config_for(out_dir2));
  ASSERT_EQ(cmd_train(cfg_path, log), kExitOk);

  const std::string csv1 = read_text(out_dir1 + "/metrics.csv");
  const std::string csv2 = read_text(out_dir2 + "/metrics.csv");
  EXPECT_EQ(csv1, csv2);
  EXPECT_EQ(csv1.substr(0, csv1.find('\n')), "epoch,train_loss,val_distance,val_distance_rotated");
  EXPECT_EQ(std::count(csv1.begin(), csv1.end(), '\n'), 3);  // header + 2 epochs

  // Predict maps a field file through the trained model.
  const SphereField input = make_test_field(3, 5);
  const std::string in_path = tmp_path("pred_in.so3g");
  const std::string out_path = tmp_path("pred_out.so3g");
  data::write_grid_field(in_path, input);
  ASSERT_EQ(cmd_predict(out_dir1 + "/model.so3n", in_path, out_path, log), kExitOk);
  const SphereField predicted = data::read_grid_field(out_path);
  EXPECT_EQ(predicted.kind, FieldKind::kVector);
  EXPECT_TRUE(predicted.same_grid(input));

  // Equivariance audit runs on the stored checkpoint.
  std::ostringstream audit;
  ASSERT_EQ(cmd_equivariance(out_dir1 + "/model.so3n", 2, 3, audit), kExitOk);
  EXPECT_NE(audit.str().find("max_relative_error"), std::string::npos);
}

TEST(ExitCodes, IoAndConfigErrors) {
  std::ostringstream out;
  try {
    cmd_train(tmp_path("missing.cfg"), out);
    FAIL();
  } catch (const IoError&) {
  }
  const std::string cfg_path = tmp_path("bad.cfg");
  write_text(cfg_path, "unknown_key=1\noutput_dir=x\n");
  EXPECT_THROW(cmd_train(cfg_path, out), ConfigError);
  EXPECT_THROW(cmd_predict(tmp_path("nope.so3n"), tmp_path("a"), tmp_path("b"), out), IoError);
}

TEST(Binary, EndToEndSelftest) {
#ifdef SO3NET_CLI_PATH
  const std::string cmd = std::string(SO3NET_CLI_PATH) + " selftest --bandlimit 2 > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string(SO3NET_CLI_PATH) + " nonsense 2> /dev/null";
  EXPECT_NE(std::system(bad.c_str()), 0);
#else
  GTEST_SKIP();
#endif
}
