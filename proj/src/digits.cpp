#include "bdnet/digits.hpp"

#include <algorithm>

#include "bdnet/common.hpp"

namespace bdnet {

namespace {

// 5x7 font, one string per row, '#' = lit.
const char* const kFont[10][7] = {
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},  // 0
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},  // 1
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},  // 2
    {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},  // 3
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},  // 4
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},  // 5
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},  // 6
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},  // 7
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},  // 8
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},  // 9
};

constexpr std::uint32_t kFontCols = 5;
constexpr std::uint32_t kFontRows = 7;

// Seed-domain tag keeping digit rendering streams apart from other modules.
constexpr std::uint64_t kDigitSeedTag = 0xD161;

}  // namespace

Tensor render_digit(std::uint32_t digit, const DigitStyle& style, Rng& rng) {
  if (digit > 9) fail(Status::invalid_argument, "digit must be 0..9");
  const std::uint32_t glyph_w = kFontCols * style.scale;
  const std::uint32_t glyph_h = kFontRows * style.scale;
  if (style.scale == 0 || glyph_w > style.canvas || glyph_h > style.canvas)
    fail(Status::config, "glyph does not fit the canvas at this scale");

  const std::uint32_t base_x = (style.canvas - glyph_w) / 2;
  const std::uint32_t base_y = (style.canvas - glyph_h) / 2;
  const std::uint32_t jx = std::min(style.jitter_x, std::min(base_x, style.canvas - glyph_w - base_x));
  const std::uint32_t jy = std::min(style.jitter_y, std::min(base_y, style.canvas - glyph_h - base_y));
  const std::int64_t dx = static_cast<std::int64_t>(rng.below(2 * jx + 1)) - jx;
  const std::int64_t dy = static_cast<std::int64_t>(rng.below(2 * jy + 1)) - jy;
  const std::uint32_t x0 = static_cast<std::uint32_t>(base_x + dx);
  const std::uint32_t y0 = static_cast<std::uint32_t>(base_y + dy);

  Tensor img = Tensor::zeros({1, style.canvas, style.canvas});
  for (std::uint32_t r = 0; r < kFontRows; ++r) {
    for (std::uint32_t c = 0; c < kFontCols; ++c) {
      if (kFont[digit][r][c] != '#') continue;
      if (rng.next_unit() < style.dropout) continue;
      const float v = static_cast<float>(
          rng.uniform(style.min_intensity, style.max_intensity));
      for (std::uint32_t py = 0; py < style.scale; ++py)
        for (std::uint32_t px = 0; px < style.scale; ++px)
          img.data[(y0 + r * style.scale + py) * style.canvas + x0 +
                   c * style.scale + px] = v;
    }
  }
  for (float& p : img.data) {
    p = static_cast<float>(p + rng.normal(0.0, style.noise_sigma));
    p = std::clamp(p, 0.0f, 1.0f);
  }
  return img;
}

Dataset generate_digits(std::uint32_t count_per_digit, const DigitStyle& style,
                        std::uint64_t seed) {
  if (count_per_digit == 0)
    fail(Status::invalid_argument, "count_per_digit must be positive");
  Dataset ds;
  ds.images.reserve(10u * count_per_digit);
  ds.labels.reserve(10u * count_per_digit);
  for (std::uint32_t d = 0; d < 10; ++d) {
    for (std::uint32_t i = 0; i < count_per_digit; ++i) {
      Rng rng(seed_mix({seed, kDigitSeedTag, d, i}));
      ds.images.push_back(render_digit(d, style, rng));
      ds.labels.push_back(d);
    }
  }
  return ds;
}

}  // namespace bdnet
