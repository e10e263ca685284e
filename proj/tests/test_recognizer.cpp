#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <unistd.h>

#include "bdnet/recognizer.hpp"
#include "bdnet/rng.hpp"

using namespace bdnet;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("bdnet_recognizer_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Classifier that just forwards its input through softmax, so logits are
// chosen directly by the test.
Network passthrough_classifier(std::uint32_t classes) {
  Network net;
  net.mode = NetworkMode::classifier;
  net.input_shape = {classes};
  Tensor w = Tensor::zeros({classes, classes});
  for (std::uint32_t i = 0; i < classes; ++i) w.data[i * classes + i] = 1.0f;
  net.layers.push_back(make_dense(std::move(w), Tensor::zeros({classes})));
  net.layers.push_back(make_softmax());
  return net;
}

// Feature extractor computing the identity map over a flat input.
Network passthrough_features(std::uint32_t dim) {
  Network net;
  net.mode = NetworkMode::feature_extractor;
  net.input_shape = {dim};
  Tensor w = Tensor::zeros({dim, dim});
  for (std::uint32_t i = 0; i < dim; ++i) w.data[i * dim + i] = 1.0f;
  net.layers.push_back(make_dense(std::move(w), Tensor::zeros({dim})));
  return net;
}

// Exhaustive reference: tries every candidate threshold from a dense sweep
// over the scores themselves plus sentinel-adjacent midpoints.
int threshold_hits(double t, const std::vector<double>& genuine,
                   const std::vector<double>& impostor) {
  int hits = 0;
  for (double g : genuine) hits += g >= t;
  for (double i : impostor) hits += i < t;
  return hits;
}

}  // namespace

TEST_CASE("classify accepts non-reject argmax and reports the class") {
  const Network net = passthrough_classifier(6);
  Tensor probe = Tensor::zeros({6});
  probe.data[2] = 4.0f;
  const Decision d = classify(net, probe);
  CHECK(d.accepted);
  CHECK(d.matched_class == 2);
  CHECK(d.score > 0.9);

  probe = Tensor::zeros({6});
  probe.data[5] = 4.0f;
  const Decision r = classify(net, probe);
  CHECK_FALSE(r.accepted);
  CHECK(r.matched_class == 5);
}

TEST_CASE("classify breaks argmax ties toward the lowest index") {
  const Network net = passthrough_classifier(4);
  Tensor probe = Tensor::zeros({4});
  probe.data[1] = 2.0f;
  probe.data[3] = 2.0f;
  const Decision d = classify(net, probe);
  CHECK(d.matched_class == 1);
  CHECK(d.accepted);

  const Decision all_equal = classify(net, Tensor::zeros({4}));
  CHECK(all_equal.matched_class == 0);
}

TEST_CASE("classify is invariant to monotone logit shifts") {
  const Network net = passthrough_classifier(5);
  Tensor a = Tensor::zeros({5});
  a.data[0] = 1.0f;
  a.data[3] = 3.0f;
  Tensor b = a;
  for (float& v : b.data) v += 10.0f;
  CHECK(classify(net, a).matched_class == classify(net, b).matched_class);
}

TEST_CASE("cosine similarity basics") {
  CHECK(cosine_similarity(Tensor({2}, {1, 0}), Tensor({2}, {1, 0})) ==
        doctest::Approx(1.0));
  CHECK(cosine_similarity(Tensor({2}, {1, 0}), Tensor({2}, {0, 1})) ==
        doctest::Approx(0.0));
  CHECK(cosine_similarity(Tensor({2}, {1, 0}), Tensor({2}, {-2, 0})) ==
        doctest::Approx(-1.0));
  // Scale invariance.
  CHECK(cosine_similarity(Tensor({3}, {1, 2, 3}), Tensor({3}, {10, 20, 30})) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine_similarity(Tensor({2}, {0, 0}), Tensor({2}, {1, 0})),
                  Error);
  CHECK_THROWS_AS(cosine_similarity(Tensor({2}, {1, 0}), Tensor({3}, {1, 0, 0})),
                  Error);
}

TEST_CASE("enroll averages the gallery per identity") {
  const Network net = passthrough_features(2);
  std::map<std::uint32_t, std::vector<Tensor>> gallery;
  gallery[0] = {Tensor({2}, {1.0f, 0.0f}), Tensor({2}, {3.0f, 2.0f})};
  gallery[4] = {Tensor({2}, {0.0f, 5.0f})};
  const auto enrolled = enroll(net, gallery);
  REQUIRE(enrolled.size() == 2);
  CHECK(enrolled.at(0).centroid.data == std::vector<float>{2.0f, 1.0f});
  CHECK(enrolled.at(0).gallery_size == 2);
  CHECK(enrolled.at(4).centroid.data == std::vector<float>{0.0f, 5.0f});
  CHECK(enrolled.at(4).identity == 4);

  std::map<std::uint32_t, std::vector<Tensor>> empty_gallery;
  empty_gallery[1] = {};
  CHECK_THROWS_AS(enroll(net, empty_gallery), Error);

  std::map<std::uint32_t, std::vector<Tensor>> zero_gallery;
  zero_gallery[2] = {Tensor({2}, {1.0f, 0.0f}), Tensor({2}, {-1.0f, 0.0f})};
  CHECK_THROWS_AS(enroll(net, zero_gallery), Error);

  const Network classifier = passthrough_classifier(2);
  CHECK_THROWS_AS(enroll(classifier, gallery), Error);
}

TEST_CASE("calibrate_threshold on stipulated cases") {
  // Separable: any t in (0.1, 0.9] works; the midpoint 0.5 is returned.
  CHECK(calibrate_threshold({0.9}, {0.1}) == doctest::Approx(0.5));
  // Identical lists: every threshold scores 50%, tie rule forces the
  // largest candidate, the midpoint above the top score.
  CHECK(calibrate_threshold({0.3}, {0.3}) == doctest::Approx(0.8));
  CHECK_THROWS_AS(calibrate_threshold({}, {0.1}), Error);
  CHECK_THROWS_AS(calibrate_threshold({0.1}, {}), Error);
}

TEST_CASE("calibrated threshold is optimal against a brute-force sweep") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> genuine, impostor;
    const std::size_t ng = 1 + rng.below(20);
    const std::size_t ni = 1 + rng.below(20);
    for (std::size_t i = 0; i < ng; ++i)
      genuine.push_back(rng.uniform(-0.2, 1.0));
    for (std::size_t i = 0; i < ni; ++i)
      impostor.push_back(rng.uniform(-1.0, 0.4));
    // Quantize so exact ties across the two lists actually occur.
    for (double& v : genuine) v = std::round(v * 8.0) / 8.0;
    for (double& v : impostor) v = std::round(v * 8.0) / 8.0;

    const double t = calibrate_threshold(genuine, impostor);
    const int best = threshold_hits(t, genuine, impostor);

    std::vector<double> all = genuine;
    all.insert(all.end(), impostor.begin(), impostor.end());
    std::sort(all.begin(), all.end());
    std::vector<double> candidates;
    candidates.push_back(all.front() - 1.0);
    candidates.push_back(all.back() + 1.0);
    for (double probe : all) {
      candidates.push_back(probe);
      candidates.push_back(probe - 1e-6);
      candidates.push_back(probe + 1e-6);
    }
    for (double c : candidates)
      CHECK(best >= threshold_hits(c, genuine, impostor));
  }
}

TEST_CASE("ties in calibration quality resolve toward the larger threshold") {
  // genuine {0.8}, impostor {0.2, 0.8}: candidates -0.3 / 0.5 / 1.3 score
  // 1 / 2 / 2, so the larger of the tied pair must win.
  const double t = calibrate_threshold({0.8}, {0.2, 0.8});
  CHECK(t == doctest::Approx(1.3));
}

TEST_CASE("verify accepts at and above the threshold") {
  VerificationSystem sys;
  sys.net = passthrough_features(2);
  Enrollment e;
  e.identity = 1;
  e.centroid = Tensor({2}, {1.0f, 0.0f});
  e.gallery_size = 1;
  sys.enrollments[1] = e;
  sys.threshold = 1.0;  // exact match required

  const Decision hit = verify(sys, Tensor({2}, {2.0f, 0.0f}), 1);
  CHECK(hit.accepted);  // similarity exactly 1.0, boundary accepts
  CHECK(hit.matched_class == 1);
  CHECK(hit.score == doctest::Approx(1.0));

  const Decision miss = verify(sys, Tensor({2}, {1.0f, 1.0f}), 1);
  CHECK_FALSE(miss.accepted);
  CHECK_FALSE(miss.matched_class.has_value());
  CHECK(miss.score == doctest::Approx(1.0 / std::sqrt(2.0)));

  CHECK_THROWS_AS(verify(sys, Tensor({2}, {1.0f, 0.0f}), 3), Error);
}

TEST_CASE("zero feature vectors are rejected, not errors") {
  VerificationSystem sys;
  sys.net = passthrough_features(2);
  Enrollment e;
  e.identity = 0;
  e.centroid = Tensor({2}, {1.0f, 0.0f});
  sys.enrollments[0] = e;
  sys.threshold = -0.5;
  const Decision d = verify(sys, Tensor({2}, {0.0f, 0.0f}), 0);
  CHECK_FALSE(d.accepted);
  CHECK(d.score == doctest::Approx(-1.0));
}

TEST_CASE("verification store round-trips") {
  TempDir tmp;
  VerificationStore store;
  store.threshold = 0.62517;
  for (std::uint32_t id = 0; id < 3; ++id) {
    Enrollment e;
    e.identity = id;
    e.centroid = Tensor({4}, {0.1f * id, 1.0f, -2.0f, 3.5f + id});
    e.gallery_size = 10 + id;
    store.enrollments.push_back(e);
  }
  const std::string path = tmp.file("v.bdvs");
  save_verification_store(store, path);
  const VerificationStore back = load_verification_store(path);
  CHECK(back.threshold == store.threshold);
  REQUIRE(back.enrollments.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.enrollments[i].identity == store.enrollments[i].identity);
    CHECK(back.enrollments[i].gallery_size ==
          store.enrollments[i].gallery_size);
    CHECK(back.enrollments[i].centroid.data ==
          store.enrollments[i].centroid.data);
  }

  CHECK_THROWS_AS(load_verification_store(tmp.file("none.bdvs")), Error);
}

TEST_CASE("assembling a verification system validates its parts") {
  VerificationStore store;
  store.threshold = 0.5;
  Enrollment e;
  e.identity = 2;
  e.centroid = Tensor({2}, {1.0f, 1.0f});
  e.gallery_size = 1;
  store.enrollments.push_back(e);

  const VerificationSystem sys =
      assemble_verification_system(passthrough_features(2), store);
  CHECK(sys.enrollments.size() == 1);
  CHECK(sys.enrollments.count(2) == 1);
  CHECK(sys.threshold == 0.5);

  CHECK_THROWS_AS(
      assemble_verification_system(passthrough_classifier(2), store), Error);

  VerificationStore dup = store;
  dup.enrollments.push_back(e);
  CHECK_THROWS_AS(assemble_verification_system(passthrough_features(2), dup),
                  Error);

  VerificationStore none;
  none.threshold = 0.5;
  CHECK_THROWS_AS(assemble_verification_system(passthrough_features(2), none),
                  Error);
}
