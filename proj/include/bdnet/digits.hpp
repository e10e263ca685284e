#pragma once

#include <cstdint>

#include "bdnet/dataset.hpp"
#include "bdnet/rng.hpp"

namespace bdnet {

// Rendering knobs for the synthetic digit corpus. Digits are drawn from a
// 5x7 bitmap font, scaled up, jittered around the canvas center, degraded
// with per-cell dropout, and finished with clamped Gaussian pixel noise.
struct DigitStyle {
  std::uint32_t canvas = 16;   // square canvas side in pixels
  std::uint32_t scale = 2;     // pixels per font cell
  double min_intensity = 0.6;  // lit-cell value range
  double max_intensity = 1.0;
  double dropout = 0.30;       // chance a lit cell goes dark
  double noise_sigma = 0.20;   // stddev of additive pixel noise
  std::uint32_t jitter_x = 3;  // max horizontal offset from centered
  std::uint32_t jitter_y = 1;  // max vertical offset from centered
};

// One {1,canvas,canvas} image of `digit` (0..9) drawn with the given style.
Tensor render_digit(std::uint32_t digit, const DigitStyle& style, Rng& rng);

// count_per_digit images for each digit 0..9, labeled with the raw digit.
// Image i of digit d depends only on (seed, d, i), so any slice of the set
// is reproducible in isolation.
Dataset generate_digits(std::uint32_t count_per_digit, const DigitStyle& style,
                        std::uint64_t seed);

}  // namespace bdnet
