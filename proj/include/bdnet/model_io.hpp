#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdnet/network.hpp"

namespace bdnet {

// BDNW model file, little-endian throughout:
//
//   "BDNW"                      magic
//   u16   version (currently 1)
//   u8    mode (0 classifier, 1 feature extractor)
//   u8    input rank, then u32 per input dimension
//   per layer record:
//     u8  kind tag
//     conv2d:    u32 stride, u32 padding
//     maxpool2d: u32 pool, u32 stride
//     conv2d/dense: weight tensor then bias tensor, each encoded as
//                   u8 rank, u32 dims..., f32 payload
//   u32   trailing layer-record count
//
// Save and load round-trip every weight bit-exactly.

void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

std::vector<std::uint8_t> encode_model(const Network& net);
Network decode_model(const std::vector<std::uint8_t>& bytes);

struct Digest {
  std::string algorithm;  // "sha256"
  std::vector<std::uint8_t> bytes;

  std::string hex() const;
  bool operator==(const Digest& other) const = default;
};

// SHA-256 over the exact file bytes.
Digest hash_model(const std::string& path);
Digest sha256_bytes(const std::uint8_t* data, std::size_t len);

// True iff the file's digest equals `expected`. A digest with a different
// algorithm id is an error, not a mismatch.
bool verify_model(const std::string& path, const Digest& expected);

// Parses a 64-char lowercase/uppercase hex string into a sha256 Digest.
Digest digest_from_hex(const std::string& hex);

}  // namespace bdnet
