#include "so3net/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "so3net/spectral_ops.hpp"

namespace so3net::data {

namespace {

// Little-endian scalar IO.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)); }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  void expect_magic(const char* magic) {
    if (pos_ + 4 > data_.size() || std::memcmp(data_.data() + pos_, magic, 4) != 0)
      throw FileFormatError(FileErrorCode::kMagic, path_ + ": bad magic");
    pos_ += 4;
  }
  void expect_end() {
    if (pos_ != data_.size())
      throw FileFormatError(FileErrorCode::kSize, path_ + ": trailing bytes");
  }

 private:
  std::uint64_t bytes(int n) {
    if (pos_ + n > data_.size())
      throw FileFormatError(FileErrorCode::kSize, path_ + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }

  std::string data_;
  std::string path_;
  size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError(FileErrorCode::kUnreadable, path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileFormatError(FileErrorCode::kUnreadable, path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileFormatError(FileErrorCode::kUnreadable, path + ": write failed");
}

constexpr std::uint32_t kGridVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------
// Grid fields
// ---------------------------------------------------------------------------

void write_grid_field(const std::string& path, const SphereField& field) {
  std::string out;
  out.append("SO3G");
  put_u32(out, kGridVersion);
  out.push_back(static_cast<char>(field.kind));
  put_u32(out, static_cast<std::uint32_t>(field.n_lat));
  put_u32(out, static_cast<std::uint32_t>(field.n_lon));
  const std::int64_t nodes = static_cast<std::int64_t>(field.n_lat) * field.n_lon;
  if (field.kind == FieldKind::kScalar) {
    for (std::int64_t i = 0; i < nodes; ++i) put_f64(out, field.t[i]);
  } else {
    for (std::int64_t i = 0; i < nodes; ++i) {
      put_f64(out, field.u[i]);
      put_f64(out, field.v[i]);
    }
  }
  spill(path, out);
}

SphereField read_grid_field(const std::string& path) {
  Reader r(slurp(path), path);
  r.expect_magic("SO3G");
  if (r.u32() != kGridVersion)
    throw FileFormatError(FileErrorCode::kVersion, path + ": unsupported version");
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FileFormatError(FileErrorCode::kSize, path + ": unknown field kind");
  const int n_lat = static_cast<int>(r.u32());
  const int n_lon = static_cast<int>(r.u32());
  if (n_lat < 2 || n_lon < 1 || n_lat > 1 << 20 || n_lon > 1 << 20)
    throw FileFormatError(FileErrorCode::kSize, path + ": implausible grid size");
  const std::int64_t nodes = static_cast<std::int64_t>(n_lat) * n_lon;
  if (kind == 0) {
    SphereField f = SphereField::scalar_field(n_lat, n_lon);
    for (std::int64_t i = 0; i < nodes; ++i) f.t[i] = r.f64();
    r.expect_end();
    return f;
  }
  SphereField f = SphereField::vector_field(n_lat, n_lon);
  for (std::int64_t i = 0; i < nodes; ++i) {
    f.u[i] = r.f64();
    f.v[i] = r.f64();
  }
  r.expect_end();
  f.zero_poles();
  return f;
}

SphereField read_csv_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError(FileErrorCode::kUnreadable, path + ": cannot open");
  std::string line;
  SO3NET_CHECK(static_cast<bool>(std::getline(in, line)), IoError, path + ": empty file");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();

  bool vector_kind;
  if (line == "lon,lat,u,v")
    vector_kind = true;
  else if (line == "lon,lat,t")
    vector_kind = false;
  else
    throw IoError(path + ": expected header 'lon,lat,u,v' or 'lon,lat,t'");

  struct Row {
    double lon, lat, a, b;
  };
  std::vector<Row> rows;
  std::vector<double> lons, lats;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row row{0, 0, 0, 0};
    char c1, c2, c3;
    if (vector_kind)
      ss >> row.lon >> c1 >> row.lat >> c2 >> row.a >> c3 >> row.b;
    else
      ss >> row.lon >> c1 >> row.lat >> c2 >> row.a;
    SO3NET_CHECK(static_cast<bool>(ss), IoError, path + ": malformed row '" + line + "'");
    rows.push_back(row);
    lons.push_back(row.lon);
    lats.push_back(row.lat);
  }
  auto unique_sorted = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique_sorted(lons);
  unique_sorted(lats);
  const int n_lon = static_cast<int>(lons.size());
  const int n_lat = static_cast<int>(lats.size());
  SO3NET_CHECK(static_cast<std::int64_t>(rows.size()) ==
                   static_cast<std::int64_t>(n_lon) * n_lat,
               IoError, path + ": rows do not form a complete rectangular grid");

  SphereField f = vector_kind ? SphereField::vector_field(n_lat, n_lon)
                              : SphereField::scalar_field(n_lat, n_lon);
  for (const Row& row : rows) {
    const int j =
        static_cast<int>(std::lower_bound(lons.begin(), lons.end(), row.lon) - lons.begin());
    // Latitude +90 (north pole) maps to colatitude row 0.
    const int k = n_lat - 1 -
                  static_cast<int>(std::lower_bound(lats.begin(), lats.end(), row.lat) -
                                   lats.begin());
    if (vector_kind) {
      f.u[f.node(k, j)] = row.a;
      f.v[f.node(k, j)] = row.b;
    } else {
      f.t[f.node(k, j)] = row.a;
    }
  }
  f.zero_poles();
  return f;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void write_checkpoint(const std::string& path, const nn::UNetModel& model) {
  std::string out;
  out.append("SO3N");
  put_u32(out, kCheckpointVersion);
  const nn::UNetConfig& cfg = model.cfg;
  put_u32(out, static_cast<std::uint32_t>(cfg.band_limit));
  put_u32(out, static_cast<std::uint32_t>(cfg.depth));
  put_u32(out, static_cast<std::uint32_t>(cfg.channels.size()));
  for (int c : cfg.channels) put_u32(out, static_cast<std::uint32_t>(c));
  put_u32(out, static_cast<std::uint32_t>(cfg.in_channels));
  put_u32(out, static_cast<std::uint32_t>(cfg.out_channels));
  put_u32(out, static_cast<std::uint32_t>(cfg.p + 16));
  put_u32(out, static_cast<std::uint32_t>(cfg.q + 16));
  put_u32(out, static_cast<std::uint32_t>(cfg.hidden_order + 16));
  out.push_back(static_cast<char>(cfg.activation));
  put_f64(out, cfg.slope_init);
  put_f64(out, cfg.oversample);
  put_f64(out, model.input_scale);
  put_f64(out, model.target_scale);

  const std::vector<const double*> params = nn::parameter_views(model);
  put_u64(out, params.size());
  for (const double* p : params) put_f64(out, *p);
  spill(path, out);
}

nn::UNetModel read_checkpoint(const std::string& path) {
  Reader r(slurp(path), path);
  r.expect_magic("SO3N");
  if (r.u32() != kCheckpointVersion)
    throw FileFormatError(FileErrorCode::kVersion, path + ": unsupported version");
  nn::UNetConfig cfg;
  cfg.band_limit = static_cast<int>(r.u32());
  cfg.depth = static_cast<int>(r.u32());
  const int n_channels = static_cast<int>(r.u32());
  SO3NET_CHECK(n_channels >= 1 && n_channels < 64, IoError, path + ": implausible channel count");
  cfg.channels.resize(n_channels);
  for (int& c : cfg.channels) c = static_cast<int>(r.u32());
  cfg.in_channels = static_cast<int>(r.u32());
  cfg.out_channels = static_cast<int>(r.u32());
  cfg.p = static_cast<int>(r.u32()) - 16;
  cfg.q = static_cast<int>(r.u32()) - 16;
  cfg.hidden_order = static_cast<int>(r.u32()) - 16;
  cfg.activation = static_cast<nn::Activation>(r.u8());
  cfg.slope_init = r.f64();
  cfg.oversample = r.f64();
  const double input_scale = r.f64();
  const double target_scale = r.f64();

  nn::UNetModel model = nn::UNetModel::create(cfg, 0);
  model.input_scale = input_scale;
  model.target_scale = target_scale;
  const std::vector<double*> params = nn::parameter_views(model);
  const std::uint64_t count = r.u64();
  if (count != params.size())
    throw FileFormatError(FileErrorCode::kSize,
                          path + ": parameter count does not match topology");
  for (double* p : params) *p = r.f64();
  r.expect_end();
  return model;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

SpectralSignal random_bandlimited(std::uint64_t seed, int band_limit, int order, double decay) {
  SO3NET_CHECK(band_limit >= std::abs(order), ShapeError, "band limit below |order|");
  Rng rng(seed);
  SpectralSignal x = SpectralSignal::zero(band_limit, order);
  for (int l = std::abs(order); l <= band_limit; ++l) {
    const double scale = std::pow(1.0 + l, -decay);
    for (int m = -l; m <= l; ++m) x.at(l, m, order) = scale * rng.normal_complex();
  }
  if (order == 0) {
    for (int l = 0; l <= band_limit; ++l)
      for (int m = 0; m <= l; ++m) {
        const cplx avg =
            0.5 * (x.at(l, m, 0) + parity(m) * std::conj(x.at(l, -m, 0)));
        x.at(l, m, 0) = avg;
        x.at(l, -m, 0) = parity(m) * std::conj(avg);
      }
  }
  return x;
}

std::vector<nn::ConvLayer> make_teacher(const SyntheticTask& task) {
  if (task.kind == TaskKind::kAutoencode) return {};
  Rng rng(task.teacher_seed);
  std::vector<nn::ConvLayer> teacher;
  nn::LayerConfig first;
  first.in_channels = 1;
  first.out_channels = 2;
  first.p = task.input_order();
  first.q = task.input_order();
  first.band_limit = task.band_limit;
  first.activation = nn::Activation::kIdentity;
  teacher.push_back(nn::ConvLayer::create(first, 1.0, rng));

  nn::LayerConfig second;
  second.in_channels = 2;
  second.out_channels = 1;
  second.p = task.input_order();
  second.q = task.target_order();
  second.band_limit = task.band_limit;
  second.activation = nn::Activation::kIdentity;
  teacher.push_back(nn::ConvLayer::create(second, 1.0, rng));
  return teacher;
}

SpectralSignal apply_teacher(const std::vector<nn::ConvLayer>& teacher, const SpectralSignal& x) {
  if (teacher.empty()) return x;
  nn::ChannelSignals h = {x};
  for (const nn::ConvLayer& layer : teacher) h = nn::layer_forward(layer, h);
  return h[0];
}

TaskKind task_from_name(const std::string& name) {
  if (name == "wind2wind") return TaskKind::kWind2Wind;
  if (name == "temp2wind") return TaskKind::kTemp2Wind;
  if (name == "autoencode") return TaskKind::kAutoencode;
  throw ConfigError("unknown task '" + name + "'");
}

std::string task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kWind2Wind: return "wind2wind";
    case TaskKind::kTemp2Wind: return "temp2wind";
    default: return "autoencode";
  }
}

nn::Dataset make_dataset(const SyntheticTask& task, std::uint64_t seed) {
  const std::vector<nn::ConvLayer> teacher = make_teacher(task);
  nn::Dataset data;
  data.reserve(task.samples);
  Rng noise_rng(seed ^ 0xabcdef1234567890ULL);
  for (int i = 0; i < task.samples; ++i) {
    nn::Sample s;
    s.input = random_bandlimited(seed + 1000003ULL * static_cast<std::uint64_t>(i),
                                 task.band_limit, task.input_order(), task.decay);
    s.target = apply_teacher(teacher, s.input);
    if (task.noise > 0.0) {
      const int q = task.target_order();
      for (int l = std::abs(q); l <= task.band_limit; ++l)
        for (int m = -l; m <= l; ++m)
          s.target.at(l, m, q) += task.noise * noise_rng.normal_complex();
    }
    data.push_back(std::move(s));
  }
  return data;
}

nn::Sample augment_rotate(const nn::Sample& sample, std::uint64_t seed) {
  Rng rng(seed);
  const RotationMatrix b = random_rotation(rng);
  nn::Sample out;
  out.input = rotate_spectral(sample.input, b);
  out.target = rotate_spectral(sample.target, b);
  return out;
}

}  // namespace so3net::data
