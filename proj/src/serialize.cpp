#include "veriml/serialize.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "veriml/errors.hpp"

namespace veriml {

void ByteWriter::u16(std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::tag(std::string_view magic) {
  for (char c : magic) out_.push_back(static_cast<std::uint8_t>(c));
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw FormatError("truncated input");
}
std::uint8_t ByteReader::u8() {
  need(1);
  return in_[pos_++];
}
std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(in_[pos_++]) << (8 * i);
  return v;
}
std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
  return v;
}
std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
  return v;
}
double ByteReader::f64() { return std::bit_cast<double>(u64()); }
Bytes ByteReader::bytes(std::size_t n) {
  need(n);
  Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}
void ByteReader::expect_tag(std::string_view magic) {
  need(magic.size());
  for (char c : magic)
    if (in_[pos_++] != static_cast<std::uint8_t>(c)) throw FormatError("bad magic, expected " + std::string(magic));
}

Bytes serialize_model(const MlpModel& model) {
  ByteWriter w;
  w.tag("VMLM");
  w.u16(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.layer_dims.size()));
  for (auto d : model.layer_dims) w.u32(static_cast<std::uint32_t>(d));
  for (const auto& layer : model.layers) {
    for (double v : layer.weights) w.f64(v);
    for (double v : layer.biases) w.f64(v);
  }
  return w.take();
}

MlpModel read_model(ByteReader& r, OutputHead head) {
  r.expect_tag("VMLM");
  if (const auto version = r.u16(); version != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version));
  const std::uint32_t n_layers = r.u32();
  if (n_layers < 2 || n_layers > 64) throw FormatError("implausible layer count");
  MlpModel m;
  m.head = head;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t d = r.u32();
    if (d == 0 || d > (1u << 20)) throw FormatError("implausible layer width");
    m.layer_dims.push_back(d);
  }
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    DenseLayer layer{m.layer_dims[l], m.layer_dims[l + 1], {}, {}};
    if (r.remaining() / 8 < layer.in * layer.out + layer.out) throw FormatError("truncated parameters");
    layer.weights.resize(layer.in * layer.out);
    layer.biases.resize(layer.out);
    for (auto& v : layer.weights) v = r.f64();
    for (auto& v : layer.biases) v = r.f64();
    for (double v : layer.weights)
      if (!std::isfinite(v)) throw FormatError("non-finite parameter");
    for (double v : layer.biases)
      if (!std::isfinite(v)) throw FormatError("non-finite parameter");
    m.layers.push_back(std::move(layer));
  }
  return m;
}

MlpModel deserialize_model(std::span<const std::uint8_t> bytes, OutputHead head) {
  ByteReader r(bytes);
  auto m = read_model(r, head);
  if (!r.done()) throw FormatError("trailing bytes after model");
  return m;
}

Bytes canonical_bytes(std::span<const double> values) {
  ByteWriter w;
  for (double v : values) w.f64(v);
  return w.take();
}

}  // namespace veriml
