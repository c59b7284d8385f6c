#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "veriml/crypto.hpp"
#include "veriml/mlp.hpp"

namespace veriml {

/// Little-endian byte sink for canonical encodings.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void tag(std::string_view magic);

  const Bytes& data() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

/// Bounds-checked little-endian reader; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  Bytes bytes(std::size_t n);
  void expect_tag(std::string_view magic);

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// "VMLM", u16 version, u32 layer count, u32 dims, then for each layer the
/// weights in (row, column) order followed by the biases, as little-endian
/// IEEE-754 doubles. The output head is not stored; standalone models are
/// softmax classifiers and wrapping formats record the head themselves.
Bytes serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::span<const std::uint8_t> bytes, OutputHead head = OutputHead::Softmax);
/// Reads one model from a stream positioned at its header.
MlpModel read_model(ByteReader& reader, OutputHead head = OutputHead::Softmax);

/// Little-endian IEEE-754 of each component, in order.
Bytes canonical_bytes(std::span<const double> values);
inline Bytes canonical_bytes(const FeatureVector& x) { return canonical_bytes(x.values); }
inline Bytes canonical_bytes(const ClassProbs& p) { return canonical_bytes(p.probs); }

}  // namespace veriml
