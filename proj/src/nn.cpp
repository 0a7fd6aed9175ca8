#include "so3net/nn.hpp"

#include <algorithm>
#include <cmath>

namespace so3net::nn {

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

namespace {

inline double leaky(double t, double slope) { return t > 0.0 ? t : slope * t; }

}  // namespace

void apply_activation(std::vector<cplx>& samples, Activation kind, double slope) {
  switch (kind) {
    case Activation::kIdentity:
      return;
    case Activation::kLeakyRelu:
      for (cplx& z : samples) z = {leaky(z.real(), slope), leaky(z.imag(), slope)};
      return;
    case Activation::kModulusTanh:
      for (cplx& z : samples) z *= std::tanh(std::norm(z));
      return;
  }
}

namespace {

// Pointwise adjoint of the activation: cot_in = J^T(pre) * cot_out, plus the
// slope gradient for the leaky case.
void activation_backward(const std::vector<cplx>& pre, std::vector<cplx>& cot, Activation kind,
                         double slope, double* slope_grad) {
  switch (kind) {
    case Activation::kIdentity:
      return;
    case Activation::kLeakyRelu: {
      double sg = 0.0;
      for (size_t i = 0; i < pre.size(); ++i) {
        const double pr = pre[i].real(), pi = pre[i].imag();
        const double cr = cot[i].real(), ci = cot[i].imag();
        cot[i] = {pr > 0.0 ? cr : slope * cr, pi > 0.0 ? ci : slope * ci};
        if (pr <= 0.0) sg += pr * cr;
        if (pi <= 0.0) sg += pi * ci;
      }
      if (slope_grad) *slope_grad += sg;
      return;
    }
    case Activation::kModulusTanh:
      for (size_t i = 0; i < pre.size(); ++i) {
        const double x = pre[i].real(), y = pre[i].imag();
        const double t = std::tanh(x * x + y * y);
        const double dt = 1.0 - t * t;
        const double a = cot[i].real(), b = cot[i].imag();
        cot[i] = {a * (t + 2 * x * x * dt) + b * (2 * x * y * dt),
                  a * (2 * x * y * dt) + b * (t + 2 * y * y * dt)};
      }
      return;
  }
}

inline std::int64_t rf_offset(int l, int p) {
  const std::int64_t pp = std::abs(p);
  return static_cast<std::int64_t>(l) * l - pp * pp;
}

}  // namespace

// ---------------------------------------------------------------------------
// Restricted convolution (learned path, conjugation dropped)
// ---------------------------------------------------------------------------

SpectralSignal conv_restricted_noconj(const SpectralSignal& x, const std::vector<cplx>& w, int p,
                                      int band_limit) {
  SO3NET_CHECK(x.band_limit == band_limit, ShapeError, "band limit mismatch");
  SO3NET_CHECK(x.order.has_value() && *x.order == p, ShapeError, "input is not tagged column p");
  SpectralSignal y = SpectralSignal::zero(band_limit);
  for (int l = std::abs(p); l <= band_limit; ++l) {
    const double c = 1.0 / (2 * l + 1);
    const cplx* row = w.data() + rf_offset(l, p) + l;
    for (int m = -l; m <= l; ++m) {
      const cplx v = c * x.at(l, m, p);
      cplx* out = &y.at(l, m, -l);
      for (int n = -l; n <= l; ++n) out[n + l] += v * row[n];
    }
  }
  return y;
}

SpectralSignal conv_restricted_noconj_adjoint_x(const SpectralSignal& cot,
                                                const std::vector<cplx>& w, int p) {
  const int L = cot.band_limit;
  SpectralSignal x = SpectralSignal::zero(L, p);
  for (int l = std::abs(p); l <= L; ++l) {
    const double c = 1.0 / (2 * l + 1);
    const cplx* row = w.data() + rf_offset(l, p) + l;
    for (int m = -l; m <= l; ++m) {
      cplx acc = 0.0;
      const cplx* in = cot.coeffs.data() + coeff_index(l, m, -l);
      for (int n = -l; n <= l; ++n) acc += std::conj(row[n]) * in[n + l];
      x.at(l, m, p) = c * acc;
    }
  }
  return x;
}

void conv_restricted_noconj_grad_w(const SpectralSignal& cot, const SpectralSignal& x, int p,
                                   std::vector<cplx>& grad) {
  const int L = cot.band_limit;
  for (int l = std::abs(p); l <= L; ++l) {
    const double c = 1.0 / (2 * l + 1);
    cplx* g = grad.data() + rf_offset(l, p) + l;
    for (int m = -l; m <= l; ++m) {
      const cplx xc = c * std::conj(x.at(l, m, p));
      const cplx* in = cot.coeffs.data() + coeff_index(l, m, -l);
      for (int n = -l; n <= l; ++n) g[n] += in[n + l] * xc;
    }
  }
}

// ---------------------------------------------------------------------------
// Conv layer
// ---------------------------------------------------------------------------

ConvLayer ConvLayer::create(const LayerConfig& cfg, double oversample, Rng& init_rng) {
  SO3NET_CHECK(cfg.band_limit >= std::max(std::abs(cfg.p), std::abs(cfg.q)), ShapeError,
               "band limit below layer orders");
  ConvLayer layer;
  layer.cfg = cfg;
  layer.plan = FftPlan::create(cfg.band_limit, EulerGrid::for_band_limit(cfg.band_limit, oversample));
  layer.slope = cfg.slope_init;
  layer.weights.assign(cfg.out_channels, {});
  const std::int64_t count = RestrictedFilter::entry_count(cfg.band_limit, cfg.p);
  for (int co = 0; co < cfg.out_channels; ++co) {
    layer.weights[co].assign(cfg.in_channels, std::vector<cplx>(count));
    for (int ci = 0; ci < cfg.in_channels; ++ci) {
      for (int l = std::abs(cfg.p); l <= cfg.band_limit; ++l) {
        // Per-coefficient variance (2l+1)/in_channels keeps the expected
        // Parseval norm stable across layers given the 1/(2l+1) factor in the
        // contraction.
        const double sigma = std::sqrt((2.0 * l + 1.0) / cfg.in_channels);
        for (int n = -l; n <= l; ++n)
          layer.weights[co][ci][rf_offset(l, cfg.p) + n + l] = sigma * init_rng.normal_complex();
      }
    }
  }
  if (cfg.q == 0) layer.bias.assign(cfg.out_channels, 0.0);
  return layer;
}

LayerGrads LayerGrads::zeros_like(const ConvLayer& layer) {
  LayerGrads g;
  g.weights.assign(layer.weights.size(), {});
  for (size_t co = 0; co < layer.weights.size(); ++co) {
    g.weights[co].assign(layer.weights[co].size(), {});
    for (size_t ci = 0; ci < layer.weights[co].size(); ++ci)
      g.weights[co][ci].assign(layer.weights[co][ci].size(), cplx(0.0));
  }
  g.bias.assign(layer.bias.size(), 0.0);
  return g;
}

ChannelSignals layer_forward(const ConvLayer& layer, const ChannelSignals& input,
                             LayerTape* tape) {
  const LayerConfig& cfg = layer.cfg;
  SO3NET_CHECK(static_cast<int>(input.size()) == cfg.in_channels, ShapeError,
               "layer input channel count mismatch");
  for (const SpectralSignal& x : input) {
    SO3NET_CHECK(x.band_limit == cfg.band_limit, ShapeError, "layer band limit mismatch");
    SO3NET_CHECK(x.order.has_value() && *x.order == cfg.p, ShapeError,
                 "layer input is not tagged with the expected column");
  }
  if (tape) {
    tape->input = input;
    tape->pre_activation.assign(cfg.out_channels, {});
  }

  ChannelSignals out(cfg.out_channels);
  for (int co = 0; co < cfg.out_channels; ++co) {
    SpectralSignal acc = SpectralSignal::zero(cfg.band_limit);
    for (int ci = 0; ci < cfg.in_channels; ++ci) {
      const SpectralSignal y =
          conv_restricted_noconj(input[ci], layer.weights[co][ci], cfg.p, cfg.band_limit);
      for (size_t i = 0; i < acc.coeffs.size(); ++i) acc.coeffs[i] += y.coeffs[i];
    }
    std::vector<cplx> torus = ift_fast_torus(acc, *layer.plan);
    if (tape) tape->pre_activation[co] = torus;
    apply_activation(torus, cfg.activation, layer.slope);
    out[co] = ft_fast_torus_column(torus, *layer.plan, cfg.q);
    if (cfg.q == 0) out[co].at(0, 0, 0) += layer.bias[co];
  }
  return out;
}

ChannelSignals layer_backward(const ConvLayer& layer, const LayerTape& tape,
                              const ChannelSignals& cotangent, LayerGrads& grads) {
  const LayerConfig& cfg = layer.cfg;
  SO3NET_CHECK(static_cast<int>(cotangent.size()) == cfg.out_channels, ShapeError,
               "layer cotangent channel count mismatch");

  ChannelSignals in_cot(cfg.in_channels);
  for (int ci = 0; ci < cfg.in_channels; ++ci)
    in_cot[ci] = SpectralSignal::zero(cfg.band_limit, cfg.p);

  for (int co = 0; co < cfg.out_channels; ++co) {
    if (cfg.q == 0) grads.bias[co] += cotangent[co].at(0, 0, 0).real();
    const SpectralSignal projected = smooth(cotangent[co], cfg.q);
    std::vector<cplx> act_cot = ft_fast_torus_column_adjoint(projected, *layer.plan, cfg.q);
    activation_backward(tape.pre_activation[co], act_cot, cfg.activation, layer.slope,
                        cfg.activation == Activation::kLeakyRelu ? &grads.slope : nullptr);
    const SpectralSignal conv_cot = ift_fast_torus_adjoint(act_cot, *layer.plan);
    for (int ci = 0; ci < cfg.in_channels; ++ci) {
      const SpectralSignal xc =
          conv_restricted_noconj_adjoint_x(conv_cot, layer.weights[co][ci], cfg.p);
      for (size_t i = 0; i < xc.coeffs.size(); ++i) in_cot[ci].coeffs[i] += xc.coeffs[i];
      conv_restricted_noconj_grad_w(conv_cot, tape.input[ci], cfg.p, grads.weights[co][ci]);
    }
  }
  return in_cot;
}

// ---------------------------------------------------------------------------
// UNet structure
// ---------------------------------------------------------------------------

std::vector<int> UNetConfig::band_schedule() const {
  std::vector<int> bands(depth + 1);
  const int step = std::max(1, band_limit / 4);
  for (int i = 0; i <= depth; ++i) bands[i] = band_limit - i * step;
  return bands;
}

void UNetConfig::validate() const {
  SO3NET_CHECK(depth >= 0, ConfigError, "depth must be non-negative");
  SO3NET_CHECK(static_cast<int>(channels.size()) == depth + 1, ConfigError,
               "channel schedule must have depth+1 entries");
  for (int c : channels) SO3NET_CHECK(c >= 1, ConfigError, "channel counts must be positive");
  SO3NET_CHECK(in_channels >= 1 && out_channels >= 1, ConfigError, "channel counts must be positive");
  const int min_band = std::max({std::abs(p), std::abs(q), std::abs(hidden_order), 1});
  const std::vector<int> bands = band_schedule();
  SO3NET_CHECK(bands.back() >= min_band, ConfigError,
               "band schedule underflows: increase band_limit or decrease depth");
}

UNetModel UNetModel::create(const UNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  UNetModel model;
  model.cfg = cfg;
  Rng rng(seed);
  const std::vector<int> bands = cfg.band_schedule();
  const int h = cfg.hidden_order;

  for (int i = 0; i < cfg.depth; ++i) {
    LayerConfig lc;
    lc.in_channels = (i == 0) ? cfg.in_channels : cfg.channels[i - 1];
    lc.out_channels = cfg.channels[i];
    lc.p = (i == 0) ? cfg.p : h;
    lc.q = h;
    lc.band_limit = bands[i];
    lc.activation = cfg.activation;
    lc.slope_init = cfg.slope_init;
    model.encoder.push_back(ConvLayer::create(lc, cfg.oversample, rng));
  }
  {
    LayerConfig lc;
    lc.in_channels = (cfg.depth == 0) ? cfg.in_channels : cfg.channels[cfg.depth - 1];
    lc.out_channels = cfg.channels[cfg.depth];
    lc.p = (cfg.depth == 0) ? cfg.p : h;
    lc.q = h;
    lc.band_limit = bands[cfg.depth];
    lc.activation = cfg.activation;
    lc.slope_init = cfg.slope_init;
    model.bottom = ConvLayer::create(lc, cfg.oversample, rng);
  }
  for (int j = 0; j < cfg.depth; ++j) {
    const int stage = cfg.depth - 1 - j;
    LayerConfig lc;
    lc.in_channels = cfg.channels[stage] + cfg.channels[stage + 1];
    lc.out_channels = cfg.channels[stage];
    lc.p = h;
    lc.q = h;
    lc.band_limit = bands[stage];
    lc.activation = cfg.activation;
    lc.slope_init = cfg.slope_init;
    model.decoder.push_back(ConvLayer::create(lc, cfg.oversample, rng));
  }
  {
    // Linear projection head: identity activation, smoothing at the output
    // column.
    LayerConfig lc;
    lc.in_channels = cfg.channels[0];
    lc.out_channels = cfg.out_channels;
    lc.p = h;
    lc.q = cfg.q;
    lc.band_limit = bands[0];
    lc.activation = Activation::kIdentity;
    model.head = ConvLayer::create(lc, cfg.oversample, rng);
  }
  return model;
}

std::vector<const ConvLayer*> UNetModel::layers() const {
  std::vector<const ConvLayer*> all;
  for (const ConvLayer& l : encoder) all.push_back(&l);
  all.push_back(&bottom);
  for (const ConvLayer& l : decoder) all.push_back(&l);
  all.push_back(&head);
  return all;
}

std::vector<ConvLayer*> UNetModel::layers() {
  std::vector<ConvLayer*> all;
  for (ConvLayer& l : encoder) all.push_back(&l);
  all.push_back(&bottom);
  for (ConvLayer& l : decoder) all.push_back(&l);
  all.push_back(&head);
  return all;
}

ModelGrads ModelGrads::zeros_like(const UNetModel& model) {
  ModelGrads g;
  for (const ConvLayer* layer : model.layers()) g.layers.push_back(LayerGrads::zeros_like(*layer));
  return g;
}

void ModelGrads::accumulate(const ModelGrads& other) {
  for (size_t i = 0; i < layers.size(); ++i) {
    LayerGrads& a = layers[i];
    const LayerGrads& b = other.layers[i];
    for (size_t co = 0; co < a.weights.size(); ++co)
      for (size_t ci = 0; ci < a.weights[co].size(); ++ci)
        for (size_t k = 0; k < a.weights[co][ci].size(); ++k)
          a.weights[co][ci][k] += b.weights[co][ci][k];
    a.slope += b.slope;
    for (size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += b.bias[k];
  }
}

void ModelGrads::scale(double factor) {
  for (LayerGrads& a : layers) {
    for (auto& per_out : a.weights)
      for (auto& w : per_out)
        for (cplx& c : w) c *= factor;
    a.slope *= factor;
    for (double& b : a.bias) b *= factor;
  }
}

namespace {

ChannelSignals pool_channels(const ChannelSignals& x, int band) {
  ChannelSignals out(x.size());
  for (size_t c = 0; c < x.size(); ++c) out[c] = pool(x[c], band);
  return out;
}

ChannelSignals unpool_channels(const ChannelSignals& x, int band) {
  ChannelSignals out(x.size());
  for (size_t c = 0; c < x.size(); ++c) out[c] = unpool(x[c], band);
  return out;
}

void add_channels(ChannelSignals& a, const ChannelSignals& b) {
  for (size_t c = 0; c < a.size(); ++c)
    for (size_t i = 0; i < a[c].coeffs.size(); ++i) a[c].coeffs[i] += b[c].coeffs[i];
}

}  // namespace

ChannelSignals unet_forward(const UNetModel& model, const ChannelSignals& input, Tape* tape) {
  const UNetConfig& cfg = model.cfg;
  SO3NET_CHECK(static_cast<int>(input.size()) == cfg.in_channels, ShapeError,
               "model input channel count mismatch");
  const std::vector<int> bands = cfg.band_schedule();
  if (tape) {
    tape->entries.assign(model.layers().size(), {});
    tape->consumed = false;
  }
  size_t idx = 0;
  auto entry = [&]() { return tape ? &tape->entries[idx] : nullptr; };

  std::vector<ChannelSignals> skips;
  ChannelSignals x = input;
  for (int i = 0; i < cfg.depth; ++i) {
    ChannelSignals a = layer_forward(model.encoder[i], x, entry());
    ++idx;
    skips.push_back(a);
    x = pool_channels(a, bands[i + 1]);
  }
  x = layer_forward(model.bottom, x, entry());
  ++idx;
  for (int j = 0; j < cfg.depth; ++j) {
    const int stage = cfg.depth - 1 - j;
    ChannelSignals cat = skips[stage];
    ChannelSignals up = unpool_channels(x, bands[stage]);
    cat.insert(cat.end(), up.begin(), up.end());
    x = layer_forward(model.decoder[j], cat, entry());
    ++idx;
  }
  return layer_forward(model.head, x, entry());
}

ChannelSignals unet_backward(const UNetModel& model, Tape& tape, const ChannelSignals& cotangent,
                             ModelGrads& grads) {
  SO3NET_CHECK(!tape.consumed, ShapeError, "tape has already been consumed");
  tape.consumed = true;
  const UNetConfig& cfg = model.cfg;
  const std::vector<int> bands = cfg.band_schedule();
  size_t idx = tape.entries.size() - 1;

  ChannelSignals cot = layer_backward(model.head, tape.entries[idx], cotangent, grads.layers[idx]);
  --idx;

  std::vector<ChannelSignals> skip_cot(cfg.depth);
  for (int j = cfg.depth - 1; j >= 0; --j) {
    const int stage = cfg.depth - 1 - j;
    ChannelSignals cat_cot =
        layer_backward(model.decoder[j], tape.entries[idx], cot, grads.layers[idx]);
    --idx;
    const int skip_n = cfg.channels[stage];
    skip_cot[stage] = ChannelSignals(cat_cot.begin(), cat_cot.begin() + skip_n);
    ChannelSignals up_cot(cat_cot.begin() + skip_n, cat_cot.end());
    cot = pool_channels(up_cot, bands[stage + 1]);  // adjoint of unpool
  }

  cot = layer_backward(model.bottom, tape.entries[idx], cot, grads.layers[idx]);
  if (idx > 0) --idx;
  for (int i = cfg.depth - 1; i >= 0; --i) {
    ChannelSignals a_cot = unpool_channels(cot, bands[i]);  // adjoint of pool
    add_channels(a_cot, skip_cot[i]);
    cot = layer_backward(model.encoder[i], tape.entries[idx], a_cot, grads.layers[idx]);
    if (idx > 0) --idx;
  }
  return cot;
}

// ---------------------------------------------------------------------------
// Parameter views
// ---------------------------------------------------------------------------

namespace {

template <typename Model, typename Ptr>
void collect_views(Model& model, std::vector<Ptr>& out) {
  for (auto* layer : model.layers()) {
    for (auto& per_out : layer->weights)
      for (auto& w : per_out) {
        // std::complex<double> permits array-oriented access to (re, im).
        auto* base = reinterpret_cast<Ptr>(w.data());
        for (size_t k = 0; k < 2 * w.size(); ++k) out.push_back(base + k);
      }
    if (layer->cfg.activation == Activation::kLeakyRelu) out.push_back(&layer->slope);
    for (auto& b : layer->bias) out.push_back(&b);
  }
}

}  // namespace

std::vector<double*> parameter_views(UNetModel& model) {
  std::vector<double*> out;
  collect_views<UNetModel, double*>(model, out);
  return out;
}

std::vector<const double*> parameter_views(const UNetModel& model) {
  std::vector<const double*> out;
  collect_views<const UNetModel, const double*>(model, out);
  return out;
}

std::vector<const double*> gradient_views(const ModelGrads& grads, const UNetModel& model) {
  std::vector<const double*> out;
  const std::vector<const ConvLayer*> layers = model.layers();
  for (size_t li = 0; li < layers.size(); ++li) {
    const LayerGrads& g = grads.layers[li];
    for (const auto& per_out : g.weights)
      for (const auto& w : per_out) {
        const double* base = reinterpret_cast<const double*>(w.data());
        for (size_t k = 0; k < 2 * w.size(); ++k) out.push_back(base + k);
      }
    if (layers[li]->cfg.activation == Activation::kLeakyRelu) out.push_back(&g.slope);
    for (const double& b : g.bias) out.push_back(&b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plane evaluation and loss
// ---------------------------------------------------------------------------

PlaneEvaluator::PlaneEvaluator(int band_limit, int q, int n_lat, int n_lon)
    : band_limit_(band_limit), q_(q), n_lat_(n_lat), n_lon_(n_lon) {
  SO3NET_CHECK(n_lat >= 2 && n_lon >= 1, ShapeError, "plane grid too small");
  const int dim = 2 * band_limit + 1;
  d_table_.assign(static_cast<size_t>(band_limit + 1) * dim * n_lat, 0.0);
  for (int k = 0; k < n_lat; ++k) {
    const double beta = kPi * k / (n_lat - 1);
    for (int l = std::abs(q); l <= band_limit; ++l) {
      const DegreeMatrix d = wigner_d(l, beta);
      for (int m = -l; m <= l; ++m)
        d_table_[(static_cast<size_t>(l) * dim + (m + band_limit)) * n_lat + k] = d.at(m, q);
    }
  }
}

std::vector<cplx> PlaneEvaluator::evaluate(const SpectralSignal& xhat) const {
  SO3NET_CHECK(xhat.band_limit == band_limit_, ShapeError, "band limit mismatch");
  const int L = band_limit_;
  std::vector<cplx> a(static_cast<size_t>(2 * L + 1) * n_lat_, cplx(0.0));
  for (int m = -L; m <= L; ++m) {
    for (int k = 0; k < n_lat_; ++k) {
      cplx acc = 0.0;
      for (int l = std::max(std::abs(m), std::abs(q_)); l <= L; ++l)
        acc += xhat.at(l, m, q_) * table(l, m, k);
      a[static_cast<size_t>(m + L) * n_lat_ + k] = acc;
    }
  }
  std::vector<cplx> out(static_cast<size_t>(n_lat_) * n_lon_, cplx(0.0));
  for (int k = 0; k < n_lat_; ++k)
    for (int j = 0; j < n_lon_; ++j) {
      cplx acc = 0.0;
      for (int m = -L; m <= L; ++m) {
        const double ph = -m * (kTwoPi * j / n_lon_);
        acc += a[static_cast<size_t>(m + L) * n_lat_ + k] * cplx(std::cos(ph), std::sin(ph));
      }
      out[static_cast<size_t>(k) * n_lon_ + j] = acc;
    }
  return out;
}

SpectralSignal PlaneEvaluator::adjoint(const std::vector<cplx>& cotangent) const {
  const int L = band_limit_;
  std::vector<cplx> a(static_cast<size_t>(2 * L + 1) * n_lat_, cplx(0.0));
  for (int m = -L; m <= L; ++m)
    for (int k = 0; k < n_lat_; ++k) {
      cplx acc = 0.0;
      for (int j = 0; j < n_lon_; ++j) {
        const double ph = m * (kTwoPi * j / n_lon_);
        acc += cotangent[static_cast<size_t>(k) * n_lon_ + j] * cplx(std::cos(ph), std::sin(ph));
      }
      a[static_cast<size_t>(m + L) * n_lat_ + k] = acc;
    }
  SpectralSignal out = SpectralSignal::zero(L, q_);
  for (int l = std::abs(q_); l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      cplx acc = 0.0;
      for (int k = 0; k < n_lat_; ++k)
        acc += a[static_cast<size_t>(m + L) * n_lat_ + k] * table(l, m, k);
      out.at(l, m, q_) = acc;
    }
  return out;
}

SphereField PlaneEvaluator::to_vector_field(const std::vector<cplx>& values) const {
  SphereField f = SphereField::vector_field(n_lat_, n_lon_);
  for (int k = 0; k < n_lat_; ++k)
    for (int j = 0; j < n_lon_; ++j) {
      const cplx w = values[static_cast<size_t>(k) * n_lon_ + j];
      f.u[f.node(k, j)] = w.imag();
      f.v[f.node(k, j)] = -w.real();
    }
  f.zero_poles();
  return f;
}

double plane_loss(const PlaneEvaluator& eval, const std::vector<cplx>& out,
                  const std::vector<cplx>& target, std::vector<cplx>* cotangent) {
  const int n_lat = eval.n_lat(), n_lon = eval.n_lon();
  if (cotangent) cotangent->assign(out.size(), cplx(0.0));
  double loss = 0.0;
  for (int k = 0; k < n_lat; ++k) {
    const double s = std::sin(kPi * k / (n_lat - 1));
    const double w = s * s;
    for (int j = 0; j < n_lon; ++j) {
      const size_t i = static_cast<size_t>(k) * n_lon + j;
      const cplx d = out[i] - target[i];
      loss += w * std::norm(d);
      if (cotangent) (*cotangent)[i] = 2.0 * w * d;
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(size_t n_params, double lr, double beta1, double beta2, double eps)
    : m_(n_params, 0.0), v_(n_params, 0.0), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(const std::vector<double*>& params,
                         const std::vector<const double*>& grads) {
  SO3NET_CHECK(params.size() == m_.size() && grads.size() == m_.size(), ShapeError,
               "optimizer state does not match parameter count");
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, step_);
  const double bc2 = 1.0 - std::pow(beta2_, step_);
  for (size_t i = 0; i < m_.size(); ++i) {
    const double g = *grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    *params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

// ---------------------------------------------------------------------------
// Evaluation and training
// ---------------------------------------------------------------------------

double evaluate_distance(const UNetModel& model, const Dataset& data, int n_lat, int n_lon,
                         std::optional<std::uint64_t> rotation_seed) {
  SO3NET_CHECK(!data.empty(), ShapeError, "empty dataset");
  const PlaneEvaluator eval(model.cfg.band_limit, model.cfg.q, n_lat, n_lon);
  Rng rot_rng(rotation_seed.value_or(0));
  double acc = 0.0;
  for (const Sample& sample : data) {
    SpectralSignal in = sample.input;
    SpectralSignal tgt = sample.target;
    if (rotation_seed) {
      const RotationMatrix b = random_rotation(rot_rng);
      in = rotate_spectral(in, b);
      tgt = rotate_spectral(tgt, b);
    }
    for (cplx& c : in.coeffs) c /= model.input_scale;
    ChannelSignals out = unet_forward(model, {in});
    for (cplx& c : out[0].coeffs) c *= model.target_scale;
    const SphereField predicted = eval.to_vector_field(eval.evaluate(out[0]));
    const SphereField truth = eval.to_vector_field(eval.evaluate(tgt));
    acc += distance(predicted, truth);
  }
  return acc / static_cast<double>(data.size());
}

namespace {

double coeff_rms(const Dataset& data, bool targets) {
  double acc = 0.0;
  std::int64_t count = 0;
  for (const Sample& s : data) {
    const SpectralSignal& x = targets ? s.target : s.input;
    for (const cplx& c : x.coeffs) acc += std::norm(c);
    count += static_cast<std::int64_t>(x.coeffs.size());
  }
  const double rms = std::sqrt(acc / std::max<std::int64_t>(count, 1));
  return rms > 0.0 ? rms : 1.0;
}

}  // namespace

std::vector<EpochMetrics> train(UNetModel& model, const Dataset& train_data,
                                const Dataset& val_data, const TrainConfig& cfg) {
  SO3NET_CHECK(!train_data.empty(), ShapeError, "empty training set");
  const UNetConfig& mc = model.cfg;
  for (const Sample& s : train_data) {
    SO3NET_CHECK(s.input.order == std::optional<int>(mc.p), ShapeError,
                 "dataset input order does not match model");
    SO3NET_CHECK(s.target.order == std::optional<int>(mc.q), ShapeError,
                 "dataset target order does not match model");
  }

  model.input_scale = coeff_rms(train_data, false);
  model.target_scale = coeff_rms(train_data, true);

  // Standardized working copies.
  std::vector<SpectralSignal> xs, ts;
  xs.reserve(train_data.size());
  ts.reserve(train_data.size());
  for (const Sample& s : train_data) {
    SpectralSignal x = s.input, t = s.target;
    for (cplx& c : x.coeffs) c /= model.input_scale;
    for (cplx& c : t.coeffs) c /= model.target_scale;
    xs.push_back(std::move(x));
    ts.push_back(std::move(t));
  }

  const EulerGrid& top = model.head.plan->grid();
  const PlaneEvaluator eval(mc.band_limit, mc.q, top.n_beta, top.n_alpha);
  std::vector<std::vector<cplx>> target_planes(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) target_planes[i] = eval.evaluate(ts[i]);

  std::vector<double*> params = parameter_views(model);
  AdamOptimizer adam(params.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

  const int n = static_cast<int>(xs.size());
  const int batch = std::max(1, std::min(cfg.batch_size, n));
  std::vector<EpochMetrics> log;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Deterministic per-epoch permutation.
    Rng perm_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch)));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[perm_rng.uniform_int(i + 1)]);

    Rng aug_rng(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(epoch));

    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int count = std::min(batch, n - start);

      // Per-sample augmentation rotations drawn serially for determinism.
      std::vector<std::optional<RotationMatrix>> rot(count);
      if (cfg.augment_rotate)
        for (int b = 0; b < count; ++b) rot[b] = random_rotation(aug_rng);

      std::vector<double> losses(count, 0.0);
      std::vector<ModelGrads> grads(count);

#pragma omp parallel for schedule(static)
      for (int b = 0; b < count; ++b) {
        const int i = order[start + b];
        SpectralSignal x = xs[i];
        std::vector<cplx> target_plane;
        const std::vector<cplx>* tp = &target_planes[i];
        if (rot[b]) {
          x = rotate_spectral(x, *rot[b]);
          target_plane = eval.evaluate(rotate_spectral(ts[i], *rot[b]));
          tp = &target_plane;
        }
        Tape tape;
        ChannelSignals out = unet_forward(model, {x}, &tape);
        std::vector<cplx> plane = eval.evaluate(out[0]);
        std::vector<cplx> plane_cot;
        losses[b] = plane_loss(eval, plane, *tp, &plane_cot);
        ChannelSignals out_cot(1, eval.adjoint(plane_cot));
        grads[b] = ModelGrads::zeros_like(model);
        unet_backward(model, tape, out_cot, grads[b]);
      }

      ModelGrads total = ModelGrads::zeros_like(model);
      for (int b = 0; b < count; ++b) {
        total.accumulate(grads[b]);
        epoch_loss += losses[b];
        SO3NET_CHECK(std::isfinite(losses[b]), NumericError,
                     "non-finite training loss at epoch " + std::to_string(epoch));
      }
      total.scale(1.0 / count);
      adam.step(params, gradient_views(total, model));
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_loss / n;
    m.val_distance = val_data.empty()
                         ? 0.0
                         : evaluate_distance(model, val_data, top.n_beta, top.n_alpha);
    m.val_distance_rotated =
        val_data.empty() ? 0.0
                         : evaluate_distance(model, val_data, top.n_beta, top.n_alpha,
                                             cfg.seed + 0x5eedULL);
    log.push_back(m);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Equivariance audit
// ---------------------------------------------------------------------------

EquivarianceReport audit_equivariance(const UNetModel& model, int trials, std::uint64_t seed) {
  const UNetConfig& cfg = model.cfg;
  Rng rng(seed);
  const EulerGrid& top = model.head.plan->grid();
  const PlaneEvaluator eval(cfg.band_limit, cfg.q, top.n_beta, top.n_alpha);

  EquivarianceReport report;
  for (int t = 0; t < trials; ++t) {
    SpectralSignal x = SpectralSignal::zero(cfg.band_limit, cfg.p);
    for (int l = std::abs(cfg.p); l <= cfg.band_limit; ++l) {
      const double scale = 1.0 / (1.0 + l);
      for (int m = -l; m <= l; ++m) x.at(l, m, cfg.p) = scale * rng.normal_complex();
    }
    const RotationMatrix b = random_rotation(rng);

    const ChannelSignals base = unet_forward(model, {x});
    const ChannelSignals from_rotated = unet_forward(model, {rotate_spectral(x, b)});
    const SpectralSignal rotated_out = rotate_spectral(base[0], b);
    double rel;
    if (cfg.q == 1) {
      const SphereField f1 = eval.to_vector_field(eval.evaluate(from_rotated[0]));
      const SphereField f2 = eval.to_vector_field(eval.evaluate(rotated_out));
      const SphereField zero = SphereField::vector_field(top.n_beta, top.n_alpha);
      rel = distance(f1, f2) / distance(f2, zero);
    } else {
      double num = 0.0, den = 0.0;
      for (size_t i = 0; i < rotated_out.coeffs.size(); ++i) {
        num += std::norm(from_rotated[0].coeffs[i] - rotated_out.coeffs[i]);
        den += std::norm(rotated_out.coeffs[i]);
      }
      rel = std::sqrt(num / den);
    }
    report.mean_rel_err += rel;
    report.max_rel_err = std::max(report.max_rel_err, rel);
    report.max_off_column =
        std::max(report.max_off_column, from_rotated[0].off_column_residue(cfg.q));
  }
  report.mean_rel_err /= std::max(trials, 1);
  return report;
}

}  // namespace so3net::nn
