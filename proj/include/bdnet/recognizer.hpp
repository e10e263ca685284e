#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdnet/network.hpp"

namespace bdnet {

struct Decision {
  bool accepted = false;
  std::optional<std::uint32_t> matched_class;
  double score = 0.0;  // top probability (classification) or similarity
};

struct Enrollment {
  std::uint32_t identity = 0;
  Tensor centroid;  // mean feature vector over the gallery
  std::uint32_t gallery_size = 0;
};

// A calibrated verifier: feature net plus enrolled centroids and the
// accept threshold. Immutable once assembled.
struct VerificationSystem {
  Network net;  // feature_extractor mode
  std::map<std::uint32_t, Enrollment> enrollments;
  double threshold = 0.0;
};

// Closed-set classification where the LAST class index is the reject
// ("other") class. Accepted iff the argmax lands on a non-reject class;
// argmax ties break toward the lowest index. matched_class always holds the
// argmax, including the reject class.
Decision classify(const Network& net, const Tensor& probe);

// dot(a,b) / (|a| |b|), 64-bit accumulation. Zero-norm input is an error.
double cosine_similarity(const Tensor& a, const Tensor& b);

// Mean feature vector per identity, accumulated in 64 bits over the listed
// order. Empty galleries and near-zero centroids (norm < 1e-9) are errors.
std::map<std::uint32_t, Enrollment> enroll(
    const Network& net,
    const std::map<std::uint32_t, std::vector<Tensor>>& gallery);

// Picks the threshold maximizing (genuine >= t) + (impostor < t) over the
// midpoints of adjacent distinct values in sorted(scores) extended with
// min-1 and max+1 sentinels; ties toward the larger threshold.
double calibrate_threshold(const std::vector<double>& genuine_scores,
                           const std::vector<double>& impostor_scores);

// Accepted iff similarity(features(probe), centroid(claim)) >= threshold;
// the boundary accepts. matched_class is the claim when accepted, absent
// otherwise.
Decision verify(const VerificationSystem& sys, const Tensor& probe,
                std::uint32_t claim);

// BDVS verifier store, little-endian: "BDVS" magic, u16 version, f64
// threshold, u32 enrollment count, then per enrollment u32 identity,
// u32 gallery_size, u8 rank, u32 dims..., f32 centroid payload. The feature
// net itself lives in its own model file.
struct VerificationStore {
  double threshold = 0.0;
  std::vector<Enrollment> enrollments;
};

void save_verification_store(const VerificationStore& store, const std::string& path);
VerificationStore load_verification_store(const std::string& path);

VerificationSystem assemble_verification_system(Network feature_net,
                                                const VerificationStore& store);

}  // namespace bdnet
