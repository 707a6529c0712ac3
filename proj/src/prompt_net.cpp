#include "losp/prompt_net.hpp"

#include "losp/parallel.hpp"
#include "losp/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace losp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapW = Eigen::Map<RowMat const>;
using MapWMut = Eigen::Map<RowMat>;

struct ConvLayer
{
  int cin, cout, k;
  std::size_t w, b;
};

struct FcLayer
{
  int in, out;
  std::size_t w, b;
};

struct Layout
{
  std::vector<ConvLayer> convs;  ///< stem, then (conv1, conv2) per block
  FcLayer fc[3];
  std::size_t total = 0;

  explicit Layout(NetArchitecture const &a)
  {
    auto conv = [&](int cin, int cout) {
      ConvLayer c{cin, cout, a.kernel, total, 0};
      total += static_cast<std::size_t>(cout) * cin * a.kernel;
      c.b = total;
      total += cout;
      convs.push_back(c);
    };
    conv(a.in_channels(), a.filters);
    for (int i = 0; i < a.blocks; ++i) {
      conv(a.filters, a.filters);
      conv(a.filters, a.filters);
    }
    int const dims[4] = {a.filters, a.fc1, a.fc2, 1};
    for (int i = 0; i < 3; ++i) {
      fc[i] = FcLayer{dims[i], dims[i + 1], total, 0};
      total += static_cast<std::size_t>(dims[i]) * dims[i + 1];
      fc[i].b = total;
      total += dims[i + 1];
    }
  }
};

Eigen::MatrixXd im2col(Eigen::MatrixXd const &x, int length, int k)
{
  int const C = static_cast<int>(x.rows());
  Eigen::Index const cols = x.cols();
  int const batch = static_cast<int>(cols / length);
  int const pad = k / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C) * k, cols);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < length; ++t) {
      Eigen::Index const col = static_cast<Eigen::Index>(b) * length + t;
      for (int tap = 0; tap < k; ++tap) {
        int const src = t + tap - pad;
        if (src < 0 || src >= length) {
          continue;
        }
        for (int i = 0; i < C; ++i) {
          out(i * k + tap, col) = x(i, static_cast<Eigen::Index>(b) * length + src);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd col2im(Eigen::MatrixXd const &cols, int channels, int length, int k)
{
  Eigen::Index const n = cols.cols();
  int const batch = static_cast<int>(n / length);
  int const pad = k / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(channels, n);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < length; ++t) {
      Eigen::Index const col = static_cast<Eigen::Index>(b) * length + t;
      for (int tap = 0; tap < k; ++tap) {
        int const src = t + tap - pad;
        if (src < 0 || src >= length) {
          continue;
        }
        for (int i = 0; i < channels; ++i) {
          out(i, static_cast<Eigen::Index>(b) * length + src) += cols(i * k + tap, col);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd relu(Eigen::MatrixXd const &z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(Eigen::MatrixXd const &grad, Eigen::MatrixXd const &z)
{
  return (z.array() > 0).select(grad, 0.0);
}

struct ConvCache
{
  Eigen::MatrixXd cols, z;
};

struct Cache
{
  ConvCache stem;
  Eigen::MatrixXd a0;
  std::vector<ConvCache> c1, c2;
  std::vector<Eigen::MatrixXd> s, a;  ///< block pre-activation sums and outputs
  Eigen::MatrixXd pooled;
  Eigen::MatrixXd fz[3], fh[3];
};

Eigen::MatrixXd conv_forward(Eigen::VectorXd const &p, ConvLayer const &c, Eigen::MatrixXd const &x, int length,
                             ConvCache &cache)
{
  cache.cols = im2col(x, length, c.k);
  MapW const W(p.data() + c.w, c.cout, static_cast<Eigen::Index>(c.cin) * c.k);
  cache.z = W * cache.cols;
  cache.z.colwise() += p.segment(c.b, c.cout);
  return cache.z;
}

Eigen::MatrixXd stack_inputs(NetArchitecture const &arch, std::span<Eigen::MatrixXd const> inputs)
{
  Eigen::MatrixXd x(arch.in_channels(), static_cast<Eigen::Index>(inputs.size()) * arch.length);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    if (inputs[b].rows() != arch.in_channels() || inputs[b].cols() != arch.length) {
      throw ConfigError("input tensor is " + std::to_string(inputs[b].rows()) + "x" +
                        std::to_string(inputs[b].cols()) + ", network expects " +
                        std::to_string(arch.in_channels()) + "x" + std::to_string(arch.length));
    }
    x.middleCols(static_cast<Eigen::Index>(b) * arch.length, arch.length) = inputs[b];
  }
  return x;
}

Eigen::RowVectorXd run_forward(PromptNetWeights const &w, std::span<Eigen::MatrixXd const> inputs, Cache &cache)
{
  auto const &arch = w.arch;
  Layout const layout(arch);
  if (static_cast<std::size_t>(w.params.size()) != layout.total) {
    throw ConfigError("weight vector does not match the architecture");
  }
  auto const &p = w.params;
  int const L = arch.length;
  int const B = static_cast<int>(inputs.size());
  Eigen::MatrixXd const x = stack_inputs(arch, inputs);

  cache.a0 = relu(conv_forward(p, layout.convs[0], x, L, cache.stem));
  cache.c1.resize(arch.blocks);
  cache.c2.resize(arch.blocks);
  cache.s.resize(arch.blocks);
  cache.a.resize(arch.blocks);
  Eigen::MatrixXd const *a = &cache.a0;
  for (int i = 0; i < arch.blocks; ++i) {
    Eigen::MatrixXd const h = relu(conv_forward(p, layout.convs[1 + 2 * i], *a, L, cache.c1[i]));
    cache.s[i] = *a + conv_forward(p, layout.convs[2 + 2 * i], h, L, cache.c2[i]);
    cache.a[i] = relu(cache.s[i]);
    a = &cache.a[i];
  }
  cache.pooled.resize(arch.filters, B);
  for (int b = 0; b < B; ++b) {
    cache.pooled.col(b) = a->middleCols(static_cast<Eigen::Index>(b) * L, L).rowwise().mean();
  }
  Eigen::MatrixXd const *h = &cache.pooled;
  for (int i = 0; i < 3; ++i) {
    auto const &f = layout.fc[i];
    MapW const W(p.data() + f.w, f.out, f.in);
    cache.fz[i] = W * *h;
    cache.fz[i].colwise() += p.segment(f.b, f.out);
    cache.fh[i] = i < 2 ? relu(cache.fz[i]) : cache.fz[i];
    h = &cache.fh[i];
  }
  return cache.fh[2].row(0);
}

void conv_backward(Eigen::VectorXd const &p, ConvLayer const &c, ConvCache const &cache, Eigen::MatrixXd const &dz,
                   Eigen::VectorXd &grad, Eigen::MatrixXd *dx, int length)
{
  Eigen::Index const kc = static_cast<Eigen::Index>(c.cin) * c.k;
  MapWMut(grad.data() + c.w, c.cout, kc) += dz * cache.cols.transpose();
  grad.segment(c.b, c.cout) += dz.rowwise().sum();
  if (dx) {
    MapW const W(p.data() + c.w, c.cout, kc);
    *dx = col2im(W.transpose() * dz, c.cin, length, c.k);
  }
}

} // namespace

std::size_t NetArchitecture::param_count() const { return Layout(*this).total; }

void NetArchitecture::validate() const
{
  if (n_shots < 1 || length < 1 || filters < 1 || blocks < 0 || fc1 < 1 || fc2 < 1) {
    throw ConfigError("network architecture fields must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("network kernel size must be odd and positive");
  }
}

PromptNetWeights init_weights(NetArchitecture const &arch, std::uint64_t seed)
{
  arch.validate();
  Layout const layout(arch);
  PromptNetWeights w{arch, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total))};
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
    std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / fan_in));
    for (std::size_t i = 0; i < count; ++i) {
      w.params(static_cast<Eigen::Index>(off + i)) = nd(rng);
    }
  };
  for (auto const &c : layout.convs) {
    fill(c.w, static_cast<std::size_t>(c.cout) * c.cin * c.k, c.cin * c.k);
  }
  for (auto const &f : layout.fc) {
    fill(f.w, static_cast<std::size_t>(f.out) * f.in, f.in);
  }
  return w;
}

Eigen::MatrixXd featurize(ShotSignals const &signals)
{
  if (signals.empty()) {
    return {};
  }
  Eigen::Index const L = signals.front().size();
  Eigen::MatrixXd f(2 * static_cast<Eigen::Index>(signals.size()), L);
  for (std::size_t j = 0; j < signals.size(); ++j) {
    f.row(2 * j) = signals[j].real().transpose();
    f.row(2 * j + 1) = signals[j].imag().transpose();
  }
  return f;
}

Eigen::MatrixXd featurize(HybridLine const &line) { return featurize(line.signals); }

ShotSignals unfeaturize(Eigen::MatrixXd const &features)
{
  if (features.rows() % 2 != 0) {
    throw ConfigError("feature tensor must have an even channel count");
  }
  ShotSignals s(features.rows() / 2);
  for (std::size_t j = 0; j < s.size(); ++j) {
    s[j] = CxVector(features.cols());
    for (Eigen::Index k = 0; k < features.cols(); ++k) {
      s[j](k) = Cx(features(2 * j, k), features(2 * j + 1, k));
    }
  }
  return s;
}

Eigen::VectorXd forward(PromptNetWeights const &weights, std::span<Eigen::MatrixXd const> inputs)
{
  Cache cache;
  return run_forward(weights, inputs, cache).transpose();
}

double predict_raw(PromptNetWeights const &weights, HybridLine const &line)
{
  if (line.n_shots() != weights.arch.n_shots || line.length() != weights.arch.length) {
    throw ConfigError("line has " + std::to_string(line.n_shots()) + " shots of length " +
                      std::to_string(line.length()) + ", network expects " + std::to_string(weights.arch.n_shots) +
                      " of length " + std::to_string(weights.arch.length));
  }
  Eigen::MatrixXd const f = featurize(line);
  return forward(weights, std::span<Eigen::MatrixXd const>(&f, 1))(0);
}

int clamp_rank(double raw, int r_max)
{
  if (!std::isfinite(raw)) {
    throw NumericalError("network produced a non-finite rank");
  }
  double const r = std::clamp(std::round(raw), 1.0, static_cast<double>(r_max));
  return static_cast<int>(r);
}

int predict_rank(PromptNetWeights const &weights, HybridLine const &line, HankelSpec const &spec)
{
  if (spec.n_shots != weights.arch.n_shots) {
    throw ConfigError("Hankel spec shot count does not match the network");
  }
  return clamp_rank(predict_raw(weights, line), spec.max_rank());
}

std::vector<int> predict_ranks(PromptNetWeights const &weights, std::span<HybridLine const> lines,
                               HankelSpec const &spec)
{
  std::vector<int> out(lines.size());
  parallel_for(lines.size(), [&](std::size_t i) { out[i] = predict_rank(weights, lines[i], spec); });
  return out;
}

LossGradient loss_and_gradient(PromptNetWeights const &weights, std::span<Eigen::MatrixXd const> inputs,
                               Eigen::VectorXd const &targets)
{
  if (inputs.empty() || static_cast<std::size_t>(targets.size()) != inputs.size()) {
    throw ConfigError("inputs and targets must be nonempty and of equal count");
  }
  auto const &arch = weights.arch;
  Layout const layout(arch);
  auto const &p = weights.params;
  int const L = arch.length;
  int const B = static_cast<int>(inputs.size());
  Cache cache;
  Eigen::RowVectorXd const out = run_forward(weights, inputs, cache);
  Eigen::RowVectorXd const diff = out - targets.transpose();

  LossGradient lg;
  lg.loss = diff.squaredNorm() / B;
  lg.gradient = Eigen::VectorXd::Zero(p.size());
  auto &g = lg.gradient;

  Eigen::MatrixXd dz = 2.0 * diff / B;
  for (int i = 2; i >= 0; --i) {
    auto const &f = layout.fc[i];
    Eigen::MatrixXd const &h_in = i == 0 ? cache.pooled : cache.fh[i - 1];
    MapWMut(g.data() + f.w, f.out, f.in) += dz * h_in.transpose();
    g.segment(f.b, f.out) += dz.rowwise().sum();
    Eigen::MatrixXd dh = MapW(p.data() + f.w, f.out, f.in).transpose() * dz;
    dz = i > 0 ? relu_mask(dh, cache.fz[i - 1]) : dh;
  }
  // dz now holds d(loss)/d(pooled).
  Eigen::MatrixXd da(arch.filters, static_cast<Eigen::Index>(B) * L);
  for (int b = 0; b < B; ++b) {
    da.middleCols(static_cast<Eigen::Index>(b) * L, L) = (dz.col(b) / L).replicate(1, L);
  }
  for (int i = arch.blocks - 1; i >= 0; --i) {
    Eigen::MatrixXd const ds = relu_mask(da, cache.s[i]);
    Eigen::MatrixXd dh;
    conv_backward(p, layout.convs[2 + 2 * i], cache.c2[i], ds, g, &dh, L);
    Eigen::MatrixXd const dz1 = relu_mask(dh, cache.c1[i].z);
    Eigen::MatrixXd dx;
    conv_backward(p, layout.convs[1 + 2 * i], cache.c1[i], dz1, g, &dx, L);
    da = ds + dx;
  }
  conv_backward(p, layout.convs[0], cache.stem, relu_mask(da, cache.stem.z), g, nullptr, L);
  return lg;
}

void TrainConfig::validate() const
{
  if (epochs < 1) {
    throw ConfigError("epochs must be >= 1");
  }
  if (!(learning_rate > 0)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  if (batch_size < 1 || decay_every < 1 || !(decay > 0)) {
    throw ConfigError("batch size, decay and decay interval must be positive");
  }
}

TrainResult train(LabeledDataset const &dataset, TrainConfig const &config)
{
  config.validate();
  std::size_t const n = dataset.samples.size();
  if (n < 2) {
    throw ConfigError("training needs at least two samples");
  }
  NetArchitecture arch;
  arch.n_shots = dataset.spec.n_shots;
  arch.length = dataset.spec.length;
  arch.filters = config.filters;
  arch.blocks = config.blocks;

  std::vector<Eigen::MatrixXd> features(n);
  Eigen::VectorXd labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    features[i] = featurize(dataset.samples[i].noisy);
    labels(i) = dataset.samples[i].label;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config.seed, 0x5350));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(config.train_fraction * n)), 1,
                                                n - 1);
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  TrainResult result;
  result.history.val_indices.assign(order.begin() + n_train, order.end());
  auto const &val_idx = result.history.val_indices;

  result.weights = init_weights(arch, derive_seed(config.seed, 0x494e4954));
  auto &params = result.weights.params;
  Layout const layout(arch);
  double mean_label = 0;
  for (auto i : train_idx) {
    mean_label += labels(i);
  }
  params(layout.fc[2].b) = mean_label / n_train;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
  double const beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  auto gather = [&](std::span<std::size_t const> idx, std::vector<Eigen::MatrixXd> &x, Eigen::VectorXd &y) {
    x.clear();
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.push_back(features[idx[i]]);
      y(i) = labels(idx[i]);
    }
  };
  auto val_loss = [&] {
    double total = 0;
    std::vector<Eigen::MatrixXd> x;
    Eigen::VectorXd y;
    for (std::size_t s = 0; s < val_idx.size(); s += config.batch_size) {
      std::size_t const e = std::min(val_idx.size(), s + config.batch_size);
      gather(std::span(val_idx).subspan(s, e - s), x, y);
      total += (forward(result.weights, x) - y).squaredNorm();
    }
    return total / val_idx.size();
  };

  std::vector<Eigen::MatrixXd> x;
  Eigen::VectorXd y;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double const lr = config.learning_rate * std::pow(config.decay, epoch / config.decay_every);
    Rng rng(derive_seed(config.seed, 0x45504f43, epoch));
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0;
    for (std::size_t s = 0; s < n_train; s += config.batch_size) {
      std::size_t const e = std::min(n_train, s + config.batch_size);
      gather(std::span(train_idx).subspan(s, e - s), x, y);
      LossGradient const lg = loss_and_gradient(result.weights, x, y);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += lg.loss * (e - s);
      ++step;
      m = beta1 * m + (1 - beta1) * lg.gradient;
      v = beta2 * v + (1 - beta2) * lg.gradient.cwiseAbs2();
      double const c1 = 1 - std::pow(beta1, step);
      double const c2 = 1 - std::pow(beta2, step);
      params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
    result.history.train_loss.push_back(epoch_loss / n_train);
    result.history.val_loss.push_back(val_loss());
  }
  params = params.cast<float>().cast<double>();
  result.history.val_loss.back() = val_loss();
  return result;
}

namespace {

constexpr char kNetMagic[8] = {'L', 'O', 'S', 'P', 'N', 'N', '0', '1'};

template <class T>
void put(std::ostream &os, T v)
{
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<char const *>(&v), sizeof(T));
}

template <class T>
T get(std::istream &is)
{
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!is) {
    throw ConfigError("weight file is truncated");
  }
  return v;
}

} // namespace

void save_weights(PromptNetWeights const &weights, std::filesystem::path const &path)
{
  auto const &a = weights.arch;
  if (static_cast<std::size_t>(weights.params.size()) != a.param_count()) {
    throw ConfigError("weight vector does not match the architecture");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  os.write(kNetMagic, 8);
  put<std::uint32_t>(os, PromptNetWeights::kVersion);
  std::uint32_t const desc[] = {static_cast<std::uint32_t>(a.n_shots), static_cast<std::uint32_t>(a.length),
                                static_cast<std::uint32_t>(a.filters), static_cast<std::uint32_t>(a.kernel),
                                static_cast<std::uint32_t>(a.blocks),  static_cast<std::uint32_t>(a.fc1),
                                static_cast<std::uint32_t>(a.fc2)};
  put<std::uint32_t>(os, std::size(desc));
  for (auto d : desc) {
    put(os, d);
  }
  put<std::uint64_t>(os, weights.params.size());
  for (Eigen::Index i = 0; i < weights.params.size(); ++i) {
    put(os, static_cast<float>(weights.params(i)));
  }
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

PromptNetWeights load_weights(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open weights " + path.string());
  }
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kNetMagic, 8) != 0) {
    throw ConfigError(path.string() + " is not a LOSPNN01 weight file");
  }
  if (auto const version = get<std::uint32_t>(is); version != PromptNetWeights::kVersion) {
    throw ConfigError("unsupported weight file version " + std::to_string(version));
  }
  if (get<std::uint32_t>(is) != 7) {
    throw ConfigError("unexpected architecture descriptor length");
  }
  PromptNetWeights w;
  auto &a = w.arch;
  for (int *field : {&a.n_shots, &a.length, &a.filters, &a.kernel, &a.blocks, &a.fc1, &a.fc2}) {
    *field = static_cast<int>(get<std::uint32_t>(is));
  }
  a.validate();
  auto const count = get<std::uint64_t>(is);
  if (count != a.param_count()) {
    throw ConfigError("weight count does not match the architecture descriptor");
  }
  w.params.resize(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < w.params.size(); ++i) {
    w.params(i) = get<float>(is);
  }
  return w;
}

} // namespace losp
