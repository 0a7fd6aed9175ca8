#pragma once

#include <string>

#include "so3net/nn.hpp"
#include "so3net/signals.hpp"

namespace so3net::data {

// ---------------------------------------------------------------------------
// Binary grid-field files ("SO3G")
// ---------------------------------------------------------------------------
// Header: magic "SO3G", version u32, kind u8 (0 scalar, 1 vector),
// n_lat u32, n_lon u32. Payload: little-endian f64, latitude-major rows;
// vector fields store interleaved (U, V). Pole rows of vector fields are
// forced to zero on read.

enum class FileErrorCode { kUnreadable, kMagic, kVersion, kSize };

struct FileFormatError : IoError {
  FileErrorCode code;
  FileFormatError(FileErrorCode c, const std::string& what) : IoError(what), code(c) {}
};

void write_grid_field(const std::string& path, const SphereField& field);
SphereField read_grid_field(const std::string& path);

/// CSV convenience import with header "lon,lat,u,v" (vector) or "lon,lat,t"
/// (scalar); lon/lat in degrees, lat from +90 (north) to -90. Rows must form
/// a complete rectangular grid. The binary format is canonical.
SphereField read_csv_field(const std::string& path);

// ---------------------------------------------------------------------------
// Model checkpoints ("SO3N")
// ---------------------------------------------------------------------------
// Header: magic "SO3N", version u32; topology block (band limit, depth,
// channel schedule, orders, activation, oversample, standardization scales);
// parameter block of little-endian f64 in parameter_views order. Round-trips
// bit-exactly.

void write_checkpoint(const std::string& path, const nn::UNetModel& model);
nn::UNetModel read_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Random column-`order` spectrum with per-degree scale (1+l)^(-decay).
/// For order 0 the coefficients are symmetrized to the real-signal constraint
/// x^l_{m,0} = (-1)^m conj(x^l_{-m,0}), so the spatial signal is real.
SpectralSignal random_bandlimited(std::uint64_t seed, int band_limit, int order, double decay);

enum class TaskKind : std::uint8_t { kWind2Wind = 0, kTemp2Wind = 1, kAutoencode = 2 };

TaskKind task_from_name(const std::string& name);
std::string task_name(TaskKind kind);

/// Desk-scale synthetic tasks: inputs are random band-limited signals, targets
/// come from a frozen equivariant teacher (two linear-activation conv layers)
/// plus optional coefficient noise; the autoencoder task sets target = input.
struct SyntheticTask {
  TaskKind kind = TaskKind::kWind2Wind;
  int band_limit = 8;
  int samples = 200;
  double decay = 1.0;
  double noise = 0.0;
  std::uint64_t teacher_seed = 2718281828ULL;

  int input_order() const { return kind == TaskKind::kTemp2Wind ? 0 : 1; }
  int target_order() const { return 1; }
};

/// The task's frozen teacher layers (empty for the autoencoder task).
std::vector<nn::ConvLayer> make_teacher(const SyntheticTask& task);

SpectralSignal apply_teacher(const std::vector<nn::ConvLayer>& teacher, const SpectralSignal& x);

nn::Dataset make_dataset(const SyntheticTask& task, std::uint64_t seed);

/// One Haar-random rotation (alpha, gamma uniform, cos beta uniform) applied
/// spectrally to both halves of the pair.
nn::Sample augment_rotate(const nn::Sample& sample, std::uint64_t seed);

}  // namespace so3net::data
