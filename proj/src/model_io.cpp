#include "bdnet/model_io.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>

namespace bdnet {

namespace {

constexpr char kMagic[4] = {'B', 'D', 'N', 'W'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  out.push_back(static_cast<std::uint8_t>(t.shape.size()));
  for (std::uint32_t d : t.shape) put_u32(out, d);
  for (float v : t.data) put_f32(out, v);
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_]) |
                      static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  Tensor tensor() {
    const std::uint8_t rank = u8();
    if (rank == 0) fail(Status::corrupt, "tensor record with rank 0");
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) {
      d = u32();
      if (d == 0) fail(Status::corrupt, "tensor record with zero dimension");
    }
    const std::size_t n = shape_numel(shape);
    need(4 * n);
    std::vector<float> data(n);
    for (auto& v : data) v = f32();
    return Tensor(std::move(shape), std::move(data));
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      fail(Status::corrupt, "model file truncated mid-payload");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Status::io, "read failed for " + path);
  return bytes;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Network& net) {
  if (net.layers.empty())
    fail(Status::invalid_argument, "refusing to save a network with no layers");
  validate_network(net);
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    if (!all_finite(net.layers[i].weights) || !all_finite(net.layers[i].bias))
      fail(Status::numeric, "layer " + std::to_string(i) +
                                ": refusing to save non-finite weights");

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(net.mode));
  out.push_back(static_cast<std::uint8_t>(net.input_shape.size()));
  for (std::uint32_t d : net.input_shape) put_u32(out, d);

  for (const Layer& l : net.layers) {
    out.push_back(static_cast<std::uint8_t>(l.kind));
    if (l.kind == LayerKind::conv2d) {
      put_u32(out, l.stride);
      put_u32(out, l.padding);
    } else if (l.kind == LayerKind::maxpool2d) {
      put_u32(out, l.pool);
      put_u32(out, l.pool_stride);
    }
    if (layer_kind_has_weights(l.kind)) {
      put_tensor(out, l.weights);
      put_tensor(out, l.bias);
    }
  }
  put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  return out;
}

Network decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Status::format, "bad magic: not a BDNW model file");
  if (bytes.size() < 12)
    fail(Status::corrupt, "model file truncated in header");

  Reader r(bytes);
  for (int i = 0; i < 4; ++i) (void)r.u8();
  const std::uint16_t version = r.u16();
  if (version != kVersion)
    fail(Status::format, "unsupported BDNW version " + std::to_string(version));

  Network net;
  const std::uint8_t mode = r.u8();
  if (mode > 1) fail(Status::format, "unknown network mode tag");
  net.mode = static_cast<NetworkMode>(mode);
  const std::uint8_t rank = r.u8();
  if (rank == 0) fail(Status::format, "input shape has rank 0");
  net.input_shape.resize(rank);
  for (auto& d : net.input_shape) d = r.u32();

  // Records run up to the trailing count; parse until exactly 4 bytes remain.
  while (r.pos() + 4 < r.size()) {
    const std::uint8_t tag = r.u8();
    if (tag > static_cast<std::uint8_t>(LayerKind::flatten))
      fail(Status::format, "unknown layer kind tag " + std::to_string(tag));
    Layer l;
    l.kind = static_cast<LayerKind>(tag);
    if (l.kind == LayerKind::conv2d) {
      l.stride = r.u32();
      l.padding = r.u32();
    } else if (l.kind == LayerKind::maxpool2d) {
      l.pool = r.u32();
      l.pool_stride = r.u32();
    }
    if (layer_kind_has_weights(l.kind)) {
      l.weights = r.tensor();
      l.bias = r.tensor();
    }
    net.layers.push_back(std::move(l));
  }
  if (r.pos() + 4 != r.size())
    fail(Status::corrupt, "model file truncated before record count");
  const std::uint32_t count = r.u32();
  if (count != net.layers.size())
    fail(Status::corrupt, "record count mismatch: trailer says " +
                              std::to_string(count) + ", parsed " +
                              std::to_string(net.layers.size()));
  if (net.layers.empty()) fail(Status::format, "model file has no layer records");

  try {
    validate_network(net);
  } catch (const Error& e) {
    fail(Status::format, std::string("model failed validation: ") + e.what());
  }
  for (const Layer& l : net.layers) {
    if (!l.weights.empty() && !all_finite(l.weights))
      fail(Status::format, "model weights contain non-finite values");
    if (!l.bias.empty() && !all_finite(l.bias))
      fail(Status::format, "model bias contains non-finite values");
  }
  return net;
}

void save_model(const Network& net, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_model(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Status::io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Status::io, "write failed for " + path);
}

Network load_model(const std::string& path) {
  return decode_model(read_file_bytes(path));
}

std::string Digest::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Digest sha256_bytes(const std::uint8_t* data, std::size_t len) {
  Digest d;
  d.algorithm = "sha256";
  d.bytes.resize(32);
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, d.bytes.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
      out_len != 32)
    fail(Status::io, "sha256 digest computation failed");
  return d;
}

Digest hash_model(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  return sha256_bytes(bytes.data(), bytes.size());
}

bool verify_model(const std::string& path, const Digest& expected) {
  if (expected.algorithm != "sha256")
    fail(Status::invalid_argument,
         "digest algorithm mismatch: expected sha256, got '" + expected.algorithm + "'");
  if (expected.bytes.size() != 32)
    fail(Status::invalid_argument, "sha256 digest must be 32 bytes");
  return hash_model(path) == expected;
}

Digest digest_from_hex(const std::string& hex) {
  if (hex.size() != 64)
    fail(Status::invalid_argument,
         "sha256 hex digest must be 64 characters, got " + std::to_string(hex.size()));
  Digest d;
  d.algorithm = "sha256";
  d.bytes.resize(32);
  for (std::size_t i = 0; i < 32; ++i) {
    auto nibble = [&](char c) -> std::uint8_t {
      if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
      fail(Status::invalid_argument, "invalid hex character in digest");
    };
    d.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return d;
}

}  // namespace bdnet
