#include "so3net/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "so3net/spectral_ops.hpp"

namespace fs = std::filesystem;

namespace so3net::cli {

namespace {

int parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    SO3NET_CHECK(pos == v.size(), ConfigError, "bad integer for " + key);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    SO3NET_CHECK(pos == v.size(), ConfigError, "bad number for " + key);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  SO3NET_CHECK(static_cast<bool>(in), IoError, "cannot open config file " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    SO3NET_CHECK(eq != std::string::npos, ConfigError,
                 path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "band_limit") {
      cfg.band_limit = parse_int(value, key);
    } else if (key == "depth") {
      cfg.depth = parse_int(value, key);
    } else if (key == "channels") {
      cfg.channels.clear();
      std::istringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.channels.push_back(parse_int(tok, key));
    } else if (key == "task") {
      cfg.task = value;
    } else if (key == "epochs") {
      cfg.epochs = parse_int(value, key);
    } else if (key == "lr") {
      cfg.lr = parse_double(value, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "augment") {
      cfg.augment = value;
    } else if (key == "samples") {
      cfg.samples = parse_int(value, key);
    } else if (key == "val_samples") {
      cfg.val_samples = parse_int(value, key);
    } else if (key == "noise") {
      cfg.noise = parse_double(value, key);
    } else if (key == "dataset") {
      cfg.dataset = value;
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

void RunConfig::validate() const {
  SO3NET_CHECK(band_limit >= 1 && band_limit <= 32, ConfigError, "band_limit must be in [1, 32]");
  SO3NET_CHECK(epochs >= 1, ConfigError, "epochs must be positive");
  SO3NET_CHECK(lr >= 0.0, ConfigError, "lr must be non-negative");
  SO3NET_CHECK(samples >= 1 && val_samples >= 1, ConfigError, "sample counts must be positive");
  SO3NET_CHECK(noise >= 0.0, ConfigError, "noise must be non-negative");
  SO3NET_CHECK(augment == "none" || augment == "rotate", ConfigError,
               "augment must be 'none' or 'rotate'");
  data::task_from_name(task);  // throws on unknown task
  SO3NET_CHECK(!output_dir.empty(), ConfigError, "output_dir is required");
  if (!dataset.empty())
    SO3NET_CHECK(fs::is_directory(dataset + "/train") && fs::is_directory(dataset + "/val"),
                 IoError, "dataset directory must contain train/ and val/ subdirectories");
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

namespace {

struct Check {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_error <= tolerance; }
};

void report(std::ostream& out, std::vector<Check>& checks, const std::string& name, double err,
            double tol) {
  checks.push_back({name, err, tol});
  out << (err <= tol ? "PASS " : "FAIL ") << std::left << std::setw(28) << name
      << " max_error=" << std::scientific << std::setprecision(3) << err << " tolerance=" << tol
      << "\n";
}

double coeff_rel_err(const SpectralSignal& got, const SpectralSignal& want) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < want.coeffs.size(); ++i) {
    num += std::norm(got.coeffs[i] - want.coeffs[i]);
    den += std::norm(want.coeffs[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace

int cmd_selftest(int band_limit, std::uint64_t seed, bool corrupt_delta, std::ostream& out) {
  SO3NET_CHECK(band_limit >= 0 && band_limit <= 32, ConfigError, "band limit must be in [0, 32]");
  const int L = band_limit;
  Rng rng(seed);
  std::vector<Check> checks;

  {  // Delta orthogonality (fault-injection hook corrupts a local copy).
    double worst = 0.0;
    for (int l = 0; l <= std::min(L, 16); ++l) {
      WignerDelta d = wigner_delta(l);
      if (corrupt_delta && l == std::min(L, 16)) d.v[0] += 1e-3;
      for (int a = -l; a <= l; ++a)
        for (int b = -l; b <= l; ++b) {
          double dot = 0.0;
          for (int s = -l; s <= l; ++s) dot += d.at(s, a) * d.at(s, b);
          worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
        }
    }
    report(out, checks, "delta-orthogonality", worst, 1e-12);
  }

  {  // d-matrix orthogonality at random angles.
    double worst = 0.0;
    for (int l = 0; l <= std::min(L, 16); ++l) {
      const DegreeMatrix d = wigner_d(l, rng.uniform(0.0, kPi));
      for (int a = -l; a <= l; ++a)
        for (int b = -l; b <= l; ++b) {
          double dot = 0.0;
          for (int s = -l; s <= l; ++s) dot += d.at(s, a) * d.at(s, b);
          worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
        }
    }
    report(out, checks, "wigner-d-orthogonality", worst, 1e-11);
  }

  {  // Representation property on random pairs.
    double worst = 0.0;
    for (int l = 1; l <= std::min(L, 8); ++l) {
      const RotationMatrix a = random_rotation(rng), b = random_rotation(rng);
      const EulerAngles ea = matrix_to_euler(a), eb = matrix_to_euler(b),
                        eab = matrix_to_euler(a * b);
      const DegreeMatrixC da = wigner_D(l, ea.alpha, ea.beta, ea.gamma);
      const DegreeMatrixC db = wigner_D(l, eb.alpha, eb.beta, eb.gamma);
      const DegreeMatrixC dab = wigner_D(l, eab.alpha, eab.beta, eab.gamma);
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n) {
          cplx acc = 0.0;
          for (int s = -l; s <= l; ++s) acc += da.at(m, s) * db.at(s, n);
          worst = std::max(worst, std::abs(acc - dab.at(m, n)));
        }
    }
    report(out, checks, "representation-property", worst, 1e-10);
  }

  auto plan = FftPlan::create(L);
  auto random_spectrum = [&rng](int bl, std::optional<int> column) {
    SpectralSignal x = SpectralSignal::zero(bl, column);
    for (int l = 0; l <= bl; ++l)
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n) {
          if (column && n != *column) continue;
          x.at(l, m, n) = rng.normal_complex();
        }
    return x;
  };

  {  // Transform round trip at the requested band limit.
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
      const SpectralSignal x = random_spectrum(L, std::nullopt);
      worst = std::max(worst, coeff_rel_err(ft_fast(ift_fast(x, *plan), *plan), x));
    }
    report(out, checks, "transform-roundtrip", worst, 1e-9);
  }

  {  // Fast transform against the direct quadrature reference.
    const int lc = std::min(L, 8);
    auto small_plan = FftPlan::create(lc);
    const SpectralSignal x = random_spectrum(lc, std::nullopt);
    const SpatialSignalSO3 xs = ift_direct(x, small_plan->grid());
    const double err = coeff_rel_err(ft_fast(xs, *small_plan), ft_direct(xs, lc));
    report(out, checks, "fast-vs-direct", err, 1e-9);
  }

  {  // Convolution theorem against the spatial formula on sample points.
    const int lc = std::min(L, 4);
    const SpectralSignal x = random_spectrum(lc, std::nullopt);
    const SpectralSignal psihat = random_spectrum(lc, std::nullopt);
    Filter psi = Filter::zero(lc);
    psi.coeffs = psihat.coeffs;
    const SpectralSignal y = conv_left(x, psi);
    auto big = FftPlan::create(2 * lc);
    const SpatialSignalSO3 xs = ift_direct(x, big->grid());
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
      const RotationMatrix a = random_rotation(rng);
      // <x, l_A psi> via quadrature with psi evaluated pointwise.
      SpatialSignalSO3 tr = SpatialSignalSO3::zero(big->grid());
      const RotationMatrix ainv = a.transposed();
      const EulerGrid& g = big->grid();
#pragma omp parallel for schedule(static)
      for (std::int64_t node = 0; node < g.size(); ++node) {
        const int j = static_cast<int>(node / (static_cast<std::int64_t>(g.n_beta) * g.n_gamma));
        const int k = static_cast<int>((node / g.n_gamma) % g.n_beta);
        const int i = static_cast<int>(node % g.n_gamma);
        const EulerAngles e =
            matrix_to_euler(ainv * euler_to_matrix(g.alpha(j), g.beta(k), g.gamma(i)));
        cplx acc = 0.0;
        for (int l = 0; l <= lc; ++l) {
          const DegreeMatrixC d = wigner_D(l, e.alpha, e.beta, e.gamma);
          for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n) acc += psihat.at(l, m, n) * d.at(m, n);
        }
        tr.samples[node] = acc;
      }
      const cplx spatial = inner_product(xs, tr, *big);
      const EulerAngles ea = matrix_to_euler(a);
      cplx spectral = 0.0;
      for (int l = 0; l <= lc; ++l) {
        const DegreeMatrixC d = wigner_D(l, ea.alpha, ea.beta, ea.gamma);
        for (int m = -l; m <= l; ++m)
          for (int n = -l; n <= l; ++n) spectral += y.at(l, m, n) * d.at(m, n);
      }
      worst = std::max(worst, std::abs(spectral - spatial));
    }
    report(out, checks, "convolution-oracle", worst, 1e-4);
  }

  {  // Smoothing projector behaviour.
    const int lc = std::max(std::min(L, 6), 1);
    const SpectralSignal x = random_spectrum(lc, std::nullopt);
    const SpectralSignal s1 = smooth(x, 1);
    double worst = coeff_rel_err(smooth(s1, 1), s1);  // idempotent
    const SpectralSignal x0 = random_spectrum(lc, 0);
    for (const cplx& c : smooth(x0, 1).coeffs) worst = std::max(worst, std::abs(c));
    report(out, checks, "smoothing-projector", worst, 1e-10);
  }

  {  // Exact equivariance of the linear pipeline (conv + transforms).
    const int lc = std::min(L, 8);
    const SpectralSignal x = random_spectrum(lc, std::nullopt);
    const SpectralSignal psihat = random_spectrum(lc, std::nullopt);
    Filter psi = Filter::zero(lc);
    psi.coeffs = psihat.coeffs;
    const RotationMatrix b = random_rotation(rng);
    const double err = coeff_rel_err(rotate_spectral(conv_left(x, psi), b),
                                     conv_left(rotate_spectral(x, b), psi));
    report(out, checks, "convolution-equivariance", err, 1e-10);
  }

  int failures = 0;
  for (const Check& c : checks)
    if (!c.pass()) ++failures;
  if (failures) {
    out << failures << " check(s) failed:";
    for (const Check& c : checks)
      if (!c.pass()) out << ' ' << c.name;
    out << "\n";
    return kExitNumeric;
  }
  out << "all checks passed\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

nn::UNetModel model_for(const RunConfig& cfg) {
  const data::TaskKind kind = data::task_from_name(cfg.task);
  nn::UNetConfig mc;
  mc.band_limit = cfg.band_limit;
  mc.depth = cfg.depth;
  mc.channels = cfg.channels;
  mc.p = (kind == data::TaskKind::kTemp2Wind) ? 0 : 1;
  mc.q = 1;
  // Mixed-type wiring: scalar input keeps the hidden features at column 0,
  // only the final layer smooths at column 1.
  mc.hidden_order = (kind == data::TaskKind::kTemp2Wind) ? 0 : 1;
  return nn::UNetModel::create(mc, cfg.seed);
}

nn::Dataset dataset_from_dir(const std::string& dir, const RunConfig& cfg, int input_order) {
  std::vector<std::string> in_files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".so3g" && e.path().stem().string().ends_with("_in"))
      in_files.push_back(e.path().string());
  std::sort(in_files.begin(), in_files.end());
  SO3NET_CHECK(!in_files.empty(), IoError, "no *_in.so3g files in " + dir);

  auto plan = FftPlan::create(cfg.band_limit);
  nn::Dataset data;
  for (const std::string& in_path : in_files) {
    std::string out_path = in_path;
    out_path.replace(out_path.size() - 8, 8, "_out.so3g");
    SO3NET_CHECK(fs::exists(out_path), IoError, "missing target file " + out_path);
    const SphereField fin = data::read_grid_field(in_path);
    const SphereField fout = data::read_grid_field(out_path);
    SO3NET_CHECK(fin.kind == (input_order == 0 ? FieldKind::kScalar : FieldKind::kVector),
                 ShapeError, in_path + ": field kind does not match the task input");
    SO3NET_CHECK(fout.kind == FieldKind::kVector, ShapeError,
                 out_path + ": target fields must be vector fields");
    nn::Sample s;
    s.input = analyze_field(fin, *plan);
    s.target = analyze_field(fout, *plan);
    data.push_back(std::move(s));
  }
  return data;
}

}  // namespace

int cmd_train(const std::string& config_path, std::ostream& out) {
  const RunConfig cfg = RunConfig::parse_file(config_path);
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  SO3NET_CHECK(fs::is_directory(cfg.output_dir), IoError,
               "cannot create output directory " + cfg.output_dir);

  const data::TaskKind kind = data::task_from_name(cfg.task);
  nn::UNetModel model = model_for(cfg);

  nn::Dataset train_data, val_data;
  if (cfg.dataset.empty()) {
    data::SyntheticTask task;
    task.kind = kind;
    task.band_limit = cfg.band_limit;
    task.noise = cfg.noise;
    task.samples = cfg.samples;
    train_data = data::make_dataset(task, cfg.seed + 1);
    task.samples = cfg.val_samples;
    val_data = data::make_dataset(task, cfg.seed + 7777777);
  } else {
    train_data = dataset_from_dir(cfg.dataset + "/train", cfg, model.cfg.p);
    val_data = dataset_from_dir(cfg.dataset + "/val", cfg, model.cfg.p);
  }

  nn::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.seed = cfg.seed;
  tc.augment_rotate = (cfg.augment == "rotate");
  const std::vector<nn::EpochMetrics> log = nn::train(model, train_data, val_data, tc);

  const std::string metrics_path = cfg.output_dir + "/metrics.csv";
  {
    std::ofstream csv(metrics_path, std::ios::trunc);
    SO3NET_CHECK(static_cast<bool>(csv), IoError, "cannot write " + metrics_path);
    csv << "epoch,train_loss,val_distance,val_distance_rotated\n";
    csv << std::setprecision(17);
    for (const nn::EpochMetrics& m : log)
      csv << m.epoch << ',' << m.train_loss << ',' << m.val_distance << ','
          << m.val_distance_rotated << "\n";
  }
  const std::string model_path = cfg.output_dir + "/model.so3n";
  data::write_checkpoint(model_path, model);

  out << "task " << cfg.task << ", " << train_data.size() << " train / " << val_data.size()
      << " val samples, " << cfg.epochs << " epochs\n";
  out << "standardization: input_scale=" << model.input_scale
      << " target_scale=" << model.target_scale << "\n";
  out << "final train_loss " << log.back().train_loss << " (initial " << log.front().train_loss
      << "), val_distance " << log.back().val_distance << ", rotated "
      << log.back().val_distance_rotated << "\n";
  out << "wrote " << metrics_path << " and " << model_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict / equivariance / rotate
// ---------------------------------------------------------------------------

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, std::ostream& out) {
  const nn::UNetModel model = data::read_checkpoint(model_path);
  const SphereField field = data::read_grid_field(input_path);
  const FieldKind expected = model.cfg.p == 0 ? FieldKind::kScalar : FieldKind::kVector;
  SO3NET_CHECK(field.kind == expected, ShapeError,
               "input field kind does not match the model input type");

  auto plan = model.encoder.empty() ? model.bottom.plan : model.encoder.front().plan;
  SpectralSignal in = analyze_field(field, *plan);
  for (cplx& c : in.coeffs) c /= model.input_scale;
  nn::ChannelSignals pred = nn::unet_forward(model, {in});
  for (cplx& c : pred[0].coeffs) c *= model.target_scale;

  const nn::PlaneEvaluator eval(model.cfg.band_limit, model.cfg.q, field.n_lat, field.n_lon);
  const SphereField result = eval.to_vector_field(eval.evaluate(pred[0]));
  data::write_grid_field(output_path, result);
  out << "wrote " << output_path << " (" << result.n_lat << " x " << result.n_lon << ")\n";
  return kExitOk;
}

int cmd_equivariance(const std::string& model_path, int trials, std::uint64_t seed,
                     std::ostream& out) {
  SO3NET_CHECK(trials >= 1, ConfigError, "trials must be positive");
  const nn::UNetModel model = data::read_checkpoint(model_path);
  const nn::EquivarianceReport r = nn::audit_equivariance(model, trials, seed);
  out << std::scientific << std::setprecision(6);
  out << "trials " << trials << "\n";
  out << "mean_relative_error " << r.mean_rel_err << "\n";
  out << "max_relative_error " << r.max_rel_err << "\n";
  out << "max_off_column_residue " << r.max_off_column << "\n";
  return kExitOk;
}

int cmd_rotate(const std::string& input_path, double alpha, double beta, double gamma,
               const std::string& output_path, std::ostream& out) {
  const SphereField field = data::read_grid_field(input_path);
  // Largest band limit the input grid can represent.
  const int L = std::max(1, std::min((field.n_lon - 1) / 2, (field.n_lat - 2) / 2));
  auto plan = FftPlan::create(L);

  const bool vector_kind = field.kind == FieldKind::kVector;
  const int order = vector_kind ? 1 : 0;
  const SpectralSignal xhat = analyze_field(field, *plan);
  const SpectralSignal rotated = rotate_spectral(xhat, euler_to_matrix(alpha, beta, gamma));

  const nn::PlaneEvaluator eval(L, order, field.n_lat, field.n_lon);
  const std::vector<cplx> plane = eval.evaluate(rotated);
  SphereField result;
  if (vector_kind) {
    result = eval.to_vector_field(plane);
  } else {
    result = SphereField::scalar_field(field.n_lat, field.n_lon);
    for (size_t i = 0; i < plane.size(); ++i) result.t[i] = plane[i].real();
  }
  data::write_grid_field(output_path, result);
  out << "rotated field written to " << output_path << " (band limit " << L << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

int run_main(int argc, char** argv) {
  CLI::App app{"Harmonic analysis and equivariant learning on the rotation group"};
  app.require_subcommand(1);

  int band_limit = 8;
  std::uint64_t seed = 0;
  bool corrupt_delta = false;
  CLI::App* selftest = app.add_subcommand("selftest", "run numerical self-checks");
  selftest->add_option("--bandlimit", band_limit, "band limit for the checks");
  selftest->add_option("--seed", seed, "random seed");
  selftest->add_flag("--corrupt-delta", corrupt_delta,
                     "fault-injection hook: corrupt a Delta matrix copy");

  std::string config_path;
  CLI::App* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "key=value run configuration")->required();

  std::string model_path, input_path, output_path;
  CLI::App* predict = app.add_subcommand("predict", "map a grid field through a model");
  predict->add_option("--model", model_path, "checkpoint path")->required();
  predict->add_option("--input", input_path, "input .so3g field")->required();
  predict->add_option("--output", output_path, "output .so3g field")->required();

  std::string eq_model;
  int trials = 20;
  std::uint64_t eq_seed = 0;
  CLI::App* equi = app.add_subcommand("equivariance", "rotation-equivariance audit of a model");
  equi->add_option("--model", eq_model, "checkpoint path")->required();
  equi->add_option("--trials", trials, "number of random rotations");
  equi->add_option("--seed", eq_seed, "random seed");

  std::string rot_in, rot_out;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  CLI::App* rotate = app.add_subcommand("rotate", "rotate a grid field spectrally");
  rotate->add_option("--input", rot_in, "input .so3g field")->required();
  rotate->add_option("--alpha", alpha, "first Euler angle (rad)");
  rotate->add_option("--beta", beta, "second Euler angle (rad)");
  rotate->add_option("--gamma", gamma, "third Euler angle (rad)");
  rotate->add_option("--output", rot_out, "output .so3g field")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (selftest->parsed()) return cmd_selftest(band_limit, seed, corrupt_delta, std::cout);
    if (train->parsed()) return cmd_train(config_path, std::cout);
    if (predict->parsed()) return cmd_predict(model_path, input_path, output_path, std::cout);
    if (equi->parsed()) return cmd_equivariance(eq_model, trials, eq_seed, std::cout);
    if (rotate->parsed()) return cmd_rotate(rot_in, alpha, beta, gamma, rot_out, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitShape;
  }
  return kExitUsage;
}

}  // namespace so3net::cli
