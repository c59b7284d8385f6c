#include "veriml/steg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "veriml/errors.hpp"
#include "veriml/serialize.hpp"

namespace veriml {
namespace {

double norm_of(std::span<const double> v, NormKind kind) {
  double acc = 0.0;
  for (double x : v) acc += kind == NormKind::L2 ? x * x : std::abs(x);
  return kind == NormKind::L2 ? std::sqrt(acc) : acc;
}

/// d||v|| / dv, zero at the origin.
Vec norm_grad(std::span<const double> v, NormKind kind, double scale) {
  Vec g(v.size(), 0.0);
  if (kind == NormKind::L2) {
    const double n = norm_of(v, kind);
    if (n == 0.0) return g;
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = scale * v[i] / n;
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = v[i] > 0 ? scale : (v[i] < 0 ? -scale : 0.0);
  }
  return g;
}

Vec diff(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

Vec concat(std::span<const double> a, std::span<const double> b) {
  Vec out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void check_steg_dims(const StegModel& steg, std::size_t cover_dim, std::size_t secret_dim) {
  if (secret_dim != steg.prep_net.input_dim()) throw ShapeError("secret dimension does not match prep network");
  if (cover_dim + steg.prep_net.output_dim() != steg.hide_net.input_dim())
    throw ShapeError("cover dimension does not match hiding network");
  if (steg.hide_net.output_dim() != cover_dim) throw ShapeError("hiding network output width != cover dimension");
}

struct Sizes {
  std::array<std::size_t, 3> prep, hide, reveal, decoder;
};

}  // namespace

double steg_loss(const FeatureVector& cover, const FeatureVector& container, const SecretMessage& secret,
                 const SecretMessage& recovered, double beta, NormKind norm) {
  if (cover.dim() != container.dim()) throw ShapeError("steg_loss: cover/container dimension mismatch");
  if (secret.dim() != recovered.dim()) throw ShapeError("steg_loss: secret dimension mismatch");
  if (!(beta >= 0.0)) throw ParameterError("steg_loss: beta must be >= 0");
  return norm_of(diff(cover.values, container.values), norm) +
         beta * norm_of(diff(secret.values, recovered.values), norm);
}

bool RevealClassifier::detects(const FeatureVector& x) const { return forward(model, x).argmax() == message_class; }

FeatureVector embed(const StegModel& steg, const FeatureVector& cover, const SecretMessage& secret) {
  check_steg_dims(steg, cover.dim(), secret.dim());
  const Vec encoding = evaluate(steg.prep_net, secret.values);
  const Vec residual = evaluate(steg.hide_net, concat(cover.values, encoding));
  FeatureVector out{Vec(cover.dim())};
  for (std::size_t i = 0; i < cover.dim(); ++i) out.values[i] = std::clamp(cover.values[i] + residual[i], 0.0, 1.0);
  return out;
}

SecretMessage reveal_secret(const RevealClassifier& reveal, const FeatureVector& container) {
  return SecretMessage{evaluate(reveal.decoder, container.values)};
}

SecretMessage random_secret(std::size_t dim, RngStream& rng) {
  SecretMessage s{Vec(dim)};
  for (auto& v : s.values) v = rng.uniform();
  return s;
}

StegMetrics evaluate_steg(const StegModel& steg, const RevealClassifier& reveal, const Dataset& covers,
                          std::uint64_t secret_seed) {
  if (covers.size() == 0) throw ParameterError("evaluate_steg: no covers");
  RngStream rng(secret_seed);
  StegMetrics m;
  std::size_t hit = 0, false_hit = 0, correct = 0;
  double distortion = 0.0;
  for (std::size_t i = 0; i < covers.size(); ++i) {
    const auto& c = covers.inputs[i];
    const auto container = embed(steg, c, random_secret(steg.secret_dim, rng));
    if (reveal.detects(container)) ++hit;
    const auto p = forward(reveal.model, c);
    if (p.argmax() == reveal.message_class) ++false_hit;
    if (p.argmax() == covers.labels[i]) ++correct;
    distortion += norm_of(diff(c.values, container.values), NormKind::L2);
  }
  const double n = static_cast<double>(covers.size());
  m.container_detection = static_cast<double>(hit) / n;
  m.cover_false_detection = static_cast<double>(false_hit) / n;
  m.mean_distortion = distortion / n;
  m.object_accuracy = static_cast<double>(correct) / n;
  return m;
}

StegArtifacts train_steg_joint(const Dataset& object_data, std::size_t secret_dim, double beta,
                               const TrainConfig& cfg, const StegArchitecture& arch) {
  cfg.validate();
  object_data.validate();
  if (object_data.n_classes < 2) throw ParameterError("train_steg_joint: need at least two object classes");
  if (object_data.size() == 0) throw ParameterError("train_steg_joint: empty dataset");
  if (secret_dim == 0) throw ParameterError("train_steg_joint: secret_dim must be positive");
  if (!(beta >= 0.0)) throw ParameterError("train_steg_joint: beta must be >= 0");

  const std::size_t dim = object_data.inputs.front().dim();
  const std::size_t n = object_data.n_classes;
  const Sizes sz{{secret_dim, arch.prep_hidden, arch.encoding_dim},
                 {dim + arch.encoding_dim, arch.hide_hidden, dim},
                 {dim, arch.reveal_hidden, n + 1},
                 {dim, arch.decoder_hidden, secret_dim}};
  const auto ws = cfg.seeds.weight_seed;

  StegArtifacts out;
  out.steg.beta = beta;
  out.steg.secret_dim = secret_dim;
  out.steg.prep_net = init_mlp(sz.prep, derive_seed(ws, 0), OutputHead::Linear);
  out.steg.hide_net = init_mlp(sz.hide, derive_seed(ws, 1), OutputHead::Linear);
  out.reveal.model = init_mlp(sz.reveal, derive_seed(ws, 2), OutputHead::Softmax);
  out.reveal.decoder = init_mlp(sz.decoder, derive_seed(ws, 3), OutputHead::Linear);
  out.reveal.message_class = n;

  auto& prep = out.steg.prep_net;
  auto& hide = out.steg.hide_net;
  auto& reveal = out.reveal.model;
  auto& decoder = out.reveal.decoder;

  RngStream order_rng(cfg.seeds.shuffle_seed);
  RngStream secret_rng(derive_seed(cfg.seeds.data_seed, 0x5EC2E7));
  std::vector<std::size_t> order(object_data.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto g_prep = ParamGradient::zeros_like(prep);
      auto g_hide = ParamGradient::zeros_like(hide);
      auto g_reveal = ParamGradient::zeros_like(reveal);
      auto g_decoder = ParamGradient::zeros_like(decoder);

      for (std::size_t i = start; i < end; ++i) {
        const Vec& cover = object_data.inputs[order[i]].values;
        const std::size_t label = object_data.labels[order[i]];
        const SecretMessage secret = random_secret(secret_dim, secret_rng);

        const auto t_prep = forward_trace(prep, secret.values);
        const auto t_hide = forward_trace(hide, concat(cover, t_prep.output));
        Vec container(dim);
        std::vector<bool> inside(dim);
        for (std::size_t d = 0; d < dim; ++d) {
          const double raw = cover[d] + t_hide.output[d];
          inside[d] = raw >= 0.0 && raw <= 1.0;
          container[d] = std::clamp(raw, 0.0, 1.0);
        }
        const auto t_dec = forward_trace(decoder, container);
        const auto t_msg = forward_trace(reveal, container);
        const auto t_cov = forward_trace(reveal, cover);

        // d(loss)/d(container), accumulated from the three consumers.
        Vec d_container = norm_grad(diff(container, cover), arch.norm, 1.0);

        Vec d_from_dec;
        const Vec d_secret = norm_grad(diff(t_dec.output, secret.values), arch.norm, beta);
        g_decoder.add_scaled(backward(decoder, t_dec, d_secret, &d_from_dec), 1.0);

        Vec delta_msg = t_msg.output;
        delta_msg[n] -= 1.0;
        Vec d_from_reveal;
        g_reveal.add_scaled(backward(reveal, t_msg, delta_msg, &d_from_reveal), 1.0);

        Vec delta_cov = t_cov.output;
        delta_cov[label] -= 1.0;
        g_reveal.add_scaled(backward(reveal, t_cov, delta_cov), 1.0);

        Vec d_residual(dim);
        for (std::size_t d = 0; d < dim; ++d)
          d_residual[d] = inside[d] ? d_container[d] + d_from_dec[d] + d_from_reveal[d] : 0.0;

        Vec d_hide_in;
        g_hide.add_scaled(backward(hide, t_hide, d_residual, &d_hide_in), 1.0);
        const std::span<const double> d_encoding(d_hide_in.data() + dim, arch.encoding_dim);
        g_prep.add_scaled(backward(prep, t_prep, d_encoding), 1.0);
      }

      const double step = cfg.learning_rate / static_cast<double>(end - start);
      apply_gradient(prep, g_prep, step);
      apply_gradient(hide, g_hide, step);
      apply_gradient(reveal, g_reveal, step);
      apply_gradient(decoder, g_decoder, step);
    }
  }

  out.metrics = evaluate_steg(out.steg, out.reveal, object_data, derive_seed(cfg.seeds.data_seed, 0xE7A1));
  if (out.metrics.container_detection < kMinContainerDetection ||
      out.metrics.cover_false_detection > kMaxCoverFalseDetection) {
    throw TrainingFailure("steganographic training did not reach detection thresholds",
                          {{"container_detection", out.metrics.container_detection},
                           {"cover_false_detection", out.metrics.cover_false_detection},
                           {"mean_distortion", out.metrics.mean_distortion},
                           {"object_accuracy", out.metrics.object_accuracy}});
  }
  return out;
}

FeatureVector generate_message_instance(const StegModel& steg, const RevealClassifier& reveal,
                                        const MlpModel& cheap, const FeatureVector& x,
                                        const SecretMessage& secret) {
  auto z = embed(steg, x, secret);
  if (!reveal.detects(z)) throw GenerationFailure("container not recognised as message class");
  if (forward(cheap, z).argmax() != forward(cheap, x).argmax())
    throw GenerationFailure("container changes the substitute model's prediction");
  return z;
}

std::optional<FeatureVector> generate_with_resampling(const StegModel& steg, const RevealClassifier& reveal,
                                                      const MlpModel& cheap, const FeatureVector& x,
                                                      RngStream& rng) {
  for (int attempt = 0; attempt < kMaxSecretResamples; ++attempt) {
    try {
      return generate_message_instance(steg, reveal, cheap, x, random_secret(steg.secret_dim, rng));
    } catch (const GenerationFailure&) {
    }
  }
  return std::nullopt;
}

void ProceduralStegKey::validate(std::size_t dim) const {
  if (n_slots == 0 || n_slots > dim) throw ParameterError("procedural key: n_slots must be in [1, dim]");
  if (!(amplitude > 0.0) || !(amplitude < 1.0 / 256.0))
    throw ParameterError("procedural key: amplitude must be in (0, 1/256)");
}

namespace {

struct SlotPlan {
  std::vector<std::size_t> index;
  std::vector<int> sign;
};

SlotPlan plan_slots(const ProceduralStegKey& key, std::size_t dim) {
  RngStream rng(key.key);
  std::vector<std::size_t> all(dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  SlotPlan p;
  for (std::size_t i = 0; i < key.n_slots; ++i) {
    const std::size_t j = i + rng.below(dim - i);
    std::swap(all[i], all[j]);
    p.index.push_back(all[i]);
  }
  for (std::size_t i = 0; i < key.n_slots; ++i) p.sign.push_back((rng.next() >> 63) ? 1 : -1);
  return p;
}

double grid_residual(double v, double amplitude) {
  const double step = 2.0 * amplitude;
  return v - step * std::round(v / step);
}

}  // namespace

FeatureVector lsb_embed(const FeatureVector& cover, const ProceduralStegKey& key) {
  key.validate(cover.dim());
  const auto plan = plan_slots(key, cover.dim());
  const double a = key.amplitude;
  FeatureVector out = cover;
  for (std::size_t i = 0; i < plan.index.size(); ++i) {
    const double offset = plan.sign[i] * a / 2.0;
    double& v = out.values[plan.index[i]];
    const double k = std::round((v - offset) / (2.0 * a));
    v = std::clamp(2.0 * a * k + offset, 0.0, 1.0);
  }
  return out;
}

bool lsb_detect(const FeatureVector& x, const ProceduralStegKey& key) {
  key.validate(x.dim());
  const auto plan = plan_slots(key, x.dim());
  std::size_t matched = 0;
  for (std::size_t i = 0; i < plan.index.size(); ++i) {
    const double r = grid_residual(x.values[plan.index[i]], key.amplitude);
    if ((r > 0 && plan.sign[i] > 0) || (r < 0 && plan.sign[i] < 0)) ++matched;
  }
  return static_cast<double>(matched) >= 0.9 * static_cast<double>(key.n_slots);
}

inline constexpr std::uint16_t kStegFormatVersion = 1;

Bytes serialize_steg(const StegModel& steg, const RevealClassifier& reveal) {
  ByteWriter w;
  w.tag("VSTG");
  w.u16(kStegFormatVersion);
  w.f64(steg.beta);
  w.u32(static_cast<std::uint32_t>(steg.secret_dim));
  w.u32(static_cast<std::uint32_t>(reveal.message_class));
  for (const auto* m : {&steg.prep_net, &steg.hide_net, &reveal.model, &reveal.decoder}) w.bytes(serialize_model(*m));
  return w.take();
}

std::pair<StegModel, RevealClassifier> deserialize_steg(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_tag("VSTG");
  if (r.u16() != kStegFormatVersion) throw FormatError("unsupported VSTG version");
  StegModel steg;
  RevealClassifier reveal;
  steg.beta = r.f64();
  steg.secret_dim = r.u32();
  reveal.message_class = r.u32();
  steg.prep_net = read_model(r, OutputHead::Linear);
  steg.hide_net = read_model(r, OutputHead::Linear);
  reveal.model = read_model(r, OutputHead::Softmax);
  reveal.decoder = read_model(r, OutputHead::Linear);
  if (!r.done()) throw FormatError("trailing bytes after VSTG payload");
  if (reveal.model.output_dim() != reveal.message_class + 1) throw FormatError("VSTG message class mismatch");
  check_steg_dims(steg, steg.hide_net.output_dim(), steg.secret_dim);
  return {std::move(steg), std::move(reveal)};
}

}  // namespace veriml
