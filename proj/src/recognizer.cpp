#include "bdnet/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace bdnet {

namespace {

constexpr char kMagic[4] = {'B', 'D', 'V', 'S'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

Decision classify(const Network& net, const Tensor& probe) {
  if (net.mode != NetworkMode::classifier)
    fail(Status::invalid_argument, "classify requires a classifier network");
  const Tensor probs = forward(net, probe);
  if (probs.numel() < 2)
    fail(Status::invalid_argument, "classifier must have a reject class");
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.numel(); ++c)
    if (probs.data[c] > probs.data[best]) best = c;
  const std::size_t reject = probs.numel() - 1;
  Decision d;
  d.accepted = best != reject;
  d.matched_class = static_cast<std::uint32_t>(best);
  d.score = probs.data[best];
  return d;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel() || a.empty())
    fail(Status::shape_mismatch, "cosine similarity needs equal-length vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    dot += static_cast<double>(a.data[i]) * b.data[i];
    na += static_cast<double>(a.data[i]) * a.data[i];
    nb += static_cast<double>(b.data[i]) * b.data[i];
  }
  if (na == 0.0 || nb == 0.0)
    fail(Status::numeric, "cosine similarity undefined for a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::map<std::uint32_t, Enrollment> enroll(
    const Network& net,
    const std::map<std::uint32_t, std::vector<Tensor>>& gallery) {
  if (net.mode != NetworkMode::feature_extractor)
    fail(Status::invalid_argument, "enroll requires a feature extractor network");
  std::map<std::uint32_t, Enrollment> out;
  for (const auto& [identity, images] : gallery) {
    if (images.empty())
      fail(Status::invalid_argument,
           "empty gallery for identity " + std::to_string(identity));
    std::vector<double> acc;
    std::vector<std::uint32_t> shape;
    for (const Tensor& img : images) {
      const Tensor f = forward(net, img);
      if (acc.empty()) {
        acc.assign(f.numel(), 0.0);
        shape = f.shape;
      }
      for (std::size_t i = 0; i < f.numel(); ++i) acc[i] += f.data[i];
    }
    Enrollment e;
    e.identity = identity;
    e.gallery_size = static_cast<std::uint32_t>(images.size());
    std::vector<float> mean(acc.size());
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
      mean[i] = static_cast<float>(acc[i] / static_cast<double>(images.size()));
      norm_sq += static_cast<double>(mean[i]) * mean[i];
    }
    if (std::sqrt(norm_sq) < 1e-9)
      fail(Status::numeric,
           "zero centroid for identity " + std::to_string(identity));
    e.centroid = Tensor(shape, std::move(mean));
    out.emplace(identity, std::move(e));
  }
  return out;
}

double calibrate_threshold(const std::vector<double>& genuine_scores,
                           const std::vector<double>& impostor_scores) {
  if (genuine_scores.empty() || impostor_scores.empty())
    fail(Status::invalid_argument, "calibration needs both score lists non-empty");

  std::vector<double> values;
  values.reserve(genuine_scores.size() + impostor_scores.size() + 2);
  values.insert(values.end(), genuine_scores.begin(), genuine_scores.end());
  values.insert(values.end(), impostor_scores.begin(), impostor_scores.end());
  std::sort(values.begin(), values.end());
  values.insert(values.begin(), values.front() - 1.0);
  values.push_back(values.back() + 1.0);

  double best_t = 0.0;
  std::size_t best_score = 0;
  bool have = false;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (values[i] == values[i + 1]) continue;
    const double t = values[i] + (values[i + 1] - values[i]) / 2.0;
    std::size_t score = 0;
    for (double g : genuine_scores) score += g >= t ? 1 : 0;
    for (double m : impostor_scores) score += m < t ? 1 : 0;
    if (!have || score > best_score || (score == best_score && t > best_t)) {
      best_t = t;
      best_score = score;
      have = true;
    }
  }
  return best_t;
}

Decision verify(const VerificationSystem& sys, const Tensor& probe,
                std::uint32_t claim) {
  const auto it = sys.enrollments.find(claim);
  if (it == sys.enrollments.end())
    fail(Status::not_found, "identity " + std::to_string(claim) + " not enrolled");
  const Tensor features = forward(sys.net, probe);
  // A probe whose features collapse to the zero vector matches nothing; score
  // it below any reachable cosine instead of failing.
  double norm = 0.0;
  for (float v : features.data) norm += static_cast<double>(v) * v;
  const double sim =
      norm == 0.0 ? -1.0 : cosine_similarity(features, it->second.centroid);
  Decision d;
  d.accepted = sim >= sys.threshold;
  if (d.accepted) d.matched_class = claim;
  d.score = sim;
  return d;
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

void save_verification_store(const VerificationStore& store, const std::string& path) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  std::uint64_t tbits;
  std::memcpy(&tbits, &store.threshold, sizeof(tbits));
  put_u64(out, tbits);
  put_u32(out, static_cast<std::uint32_t>(store.enrollments.size()));
  for (const Enrollment& e : store.enrollments) {
    if (e.centroid.empty())
      fail(Status::invalid_argument, "enrollment with empty centroid");
    put_u32(out, e.identity);
    put_u32(out, e.gallery_size);
    out.push_back(static_cast<std::uint8_t>(e.centroid.shape.size()));
    for (std::uint32_t d : e.centroid.shape) put_u32(out, d);
    for (float v : e.centroid.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      put_u32(out, bits);
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(Status::io, "cannot open " + path + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) fail(Status::io, "write failed for " + path);
}

VerificationStore load_verification_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Status::io, "read failed for " + path);

  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) fail(Status::corrupt, path + ": truncated store");
  };
  auto u8 = [&] {
    need(1);
    return bytes[pos++];
  };
  auto u16 = [&] {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                      static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  };
  auto u32 = [&] {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Status::format, path + ": bad magic, not a BDVS store");
  pos = 4;
  const std::uint16_t version = u16();
  if (version != kVersion)
    fail(Status::format, path + ": unsupported BDVS version " + std::to_string(version));

  VerificationStore store;
  need(8);
  std::uint64_t tbits = 0;
  for (int i = 0; i < 8; ++i) tbits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
  pos += 8;
  std::memcpy(&store.threshold, &tbits, sizeof(store.threshold));

  const std::uint32_t count = u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    Enrollment e;
    e.identity = u32();
    e.gallery_size = u32();
    const std::uint8_t rank = u8();
    if (rank == 0) fail(Status::corrupt, path + ": enrollment with rank 0");
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) {
      d = u32();
      if (d == 0) fail(Status::corrupt, path + ": enrollment with zero dimension");
    }
    std::vector<float> data(shape_numel(shape));
    for (auto& v : data) {
      const std::uint32_t bits = u32();
      float f;
      std::memcpy(&f, &bits, sizeof(f));
      v = f;
    }
    e.centroid = Tensor(std::move(shape), std::move(data));
    store.enrollments.push_back(std::move(e));
  }
  if (pos != bytes.size())
    fail(Status::corrupt, path + ": trailing bytes after enrollments");
  return store;
}

VerificationSystem assemble_verification_system(Network feature_net,
                                                const VerificationStore& store) {
  if (feature_net.mode != NetworkMode::feature_extractor)
    fail(Status::invalid_argument, "verification needs a feature extractor network");
  VerificationSystem sys;
  sys.net = std::move(feature_net);
  sys.threshold = store.threshold;
  for (const Enrollment& e : store.enrollments) {
    if (!sys.enrollments.emplace(e.identity, e).second)
      fail(Status::invalid_argument,
           "duplicate enrollment for identity " + std::to_string(e.identity));
  }
  if (sys.enrollments.empty())
    fail(Status::invalid_argument, "verification system has no enrollments");
  return sys;
}

}  // namespace bdnet
