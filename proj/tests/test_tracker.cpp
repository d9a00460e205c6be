#include <doctest.h>

#include <map>

#include "labelfuse/tracker.hpp"

using namespace labelfuse;

namespace {

constexpr Rgb8 kBg{12, 12, 12};

ColorImage background(int w, int h) { return ColorImage(w, h, kBg); }

void paint_rect(ColorImage& img, int x0, int y0, int w, int h, Rgb8 color) {
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      if (x >= 0 && y >= 0 && x < img.width && y < img.height) {
        img.at(x, y) = color;
      }
    }
  }
}

void paint_mask(LabelImage& mask, int x0, int y0, int w, int h,
                uint16_t label) {
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      if (x >= 0 && y >= 0 && x < mask.width && y < mask.height) {
        mask.at(x, y) = label;
      }
    }
  }
}

double mask_iou(const LabelImage& a, const LabelImage& b, uint16_t label) {
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const bool in_a = a.data[i] == label, in_b = b.data[i] == label;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

}  // namespace

TEST_SUITE_BEGIN("tracker");

TEST_CASE("static scene is a fixed point") {
  ColorImage img = background(64, 48);
  paint_rect(img, 20, 10, 12, 8, Rgb8{200, 60, 60});
  paint_rect(img, 40, 30, 6, 6, Rgb8{60, 200, 60});
  LabelImage mask(64, 48, 0);
  paint_mask(mask, 20, 10, 12, 8, 1);
  paint_mask(mask, 40, 30, 6, 6, 2);
  const PropagationResult out = propagate_mask(img, img, mask, {});
  CHECK(out.mask.data == mask.data);
  CHECK(out.lost_labels.empty());
}

TEST_CASE("translated square is recovered exactly") {
  const int dx = 3, dy = -2;
  ColorImage prev = background(64, 48);
  paint_rect(prev, 20, 15, 10, 10, Rgb8{220, 90, 30});
  ColorImage cur = background(64, 48);
  paint_rect(cur, 20 + dx, 15 + dy, 10, 10, Rgb8{220, 90, 30});
  LabelImage mask(64, 48, 0);
  paint_mask(mask, 20, 15, 10, 10, 7);
  // Oracle: the ground-truth mask under the known shift.
  LabelImage expected(64, 48, 0);
  paint_mask(expected, 20 + dx, 15 + dy, 10, 10, 7);
  TrackerConfig cfg;
  cfg.search_radius = 5;
  const PropagationResult out = propagate_mask(cur, prev, mask, cfg);
  CHECK(out.mask.data == expected.data);
}

TEST_CASE("fully occluded label is reported lost") {
  ColorImage prev = background(32, 32);
  paint_rect(prev, 10, 10, 6, 6, Rgb8{200, 200, 40});
  ColorImage cur = background(32, 32);  // painted over with background
  LabelImage mask(32, 32, 0);
  paint_mask(mask, 10, 10, 6, 6, 3);
  TrackerConfig cfg;
  cfg.min_region_area = 4;
  const PropagationResult out = propagate_mask(cur, prev, mask, cfg);
  CHECK(out.lost_labels == std::vector<uint16_t>{3});
  for (uint16_t l : out.mask.data) {
    CHECK(l == 0);
  }
}

TEST_CASE("propagate rejects bad inputs") {
  ColorImage img = background(16, 16);
  const ColorImage small = background(8, 8);
  LabelImage mask(16, 16, 0);
  paint_mask(mask, 2, 2, 4, 4, 1);
  CHECK_THROWS_AS(propagate_mask(small, img, mask, {}), InvalidInputError);
  const LabelImage empty(16, 16, 0);
  CHECK_THROWS_AS(propagate_mask(img, img, empty, {}), NoSeedError);
}

TEST_CASE("two labels keep their identities under a shared shift") {
  ColorImage prev = background(64, 48);
  paint_rect(prev, 10, 10, 8, 8, Rgb8{220, 40, 40});
  paint_rect(prev, 30, 10, 8, 8, Rgb8{40, 40, 220});
  ColorImage cur = background(64, 48);
  paint_rect(cur, 12, 11, 8, 8, Rgb8{220, 40, 40});
  paint_rect(cur, 32, 11, 8, 8, Rgb8{40, 40, 220});
  LabelImage mask(64, 48, 0);
  paint_mask(mask, 10, 10, 8, 8, 1);
  paint_mask(mask, 30, 10, 8, 8, 2);
  const PropagationResult out = propagate_mask(cur, prev, mask, {});
  LabelImage expected(64, 48, 0);
  paint_mask(expected, 12, 11, 8, 8, 1);
  paint_mask(expected, 32, 11, 8, 8, 2);
  CHECK(out.mask.data == expected.data);
}

TEST_CASE("single frame sequence returns the seed") {
  std::vector<ColorImage> images{background(32, 24)};
  LabelImage seed(32, 24, 0);
  paint_mask(seed, 5, 5, 4, 4, 1);
  const auto out = track_sequence(images, {{0, seed}}, {});
  REQUIRE(out.size() == 1);
  CHECK(out[0].data == seed.data);
}

TEST_CASE("missing frame-0 seed raises") {
  std::vector<ColorImage> images{background(32, 24), background(32, 24)};
  LabelImage seed(32, 24, 0);
  paint_mask(seed, 5, 5, 4, 4, 1);
  CHECK_THROWS_AS(track_sequence(images, {{1, seed}}, {}), NoSeedError);
}

TEST_CASE("rigid translation sequence tracks with IoU 1") {
  const int frames = 10;
  std::vector<ColorImage> images;
  std::vector<LabelImage> truth;
  for (int t = 0; t < frames; ++t) {
    ColorImage img = background(80, 60);
    paint_rect(img, 10 + 2 * t, 20 + t, 12, 9, Rgb8{230, 120, 20});
    images.push_back(img);
    LabelImage mask(80, 60, 0);
    paint_mask(mask, 10 + 2 * t, 20 + t, 12, 9, 4);
    truth.push_back(mask);
  }
  TrackerConfig cfg;
  cfg.search_radius = 4;
  const auto out = track_sequence(images, {{0, truth[0]}}, cfg);
  REQUIRE(out.size() == truth.size());
  for (int t = 0; t < frames; ++t) {
    CHECK(mask_iou(out[t], truth[t], 4) == 1.0);
  }
}

TEST_CASE("correction seed heals a corrupted frame") {
  const int frames = 10;
  std::vector<ColorImage> images;
  std::vector<LabelImage> truth;
  for (int t = 0; t < frames; ++t) {
    ColorImage img = background(80, 60);
    paint_rect(img, 10 + 2 * t, 20, 10, 10, Rgb8{230, 120, 20});
    images.push_back(img);
    LabelImage mask(80, 60, 0);
    paint_mask(mask, 10 + 2 * t, 20, 10, 10, 4);
    truth.push_back(mask);
  }
  // Deliberate corruption: frame 4 is fully occluded, so the track dies
  // there; the frame-5 seed restores it.
  images[4] = background(80, 60);
  const auto out = track_sequence(images, {{0, truth[0]}, {5, truth[5]}}, {});
  for (int t = 5; t < frames; ++t) {
    CHECK(mask_iou(out[t], truth[t], 4) == 1.0);
  }
}

TEST_CASE("outputs never invent labels and repeat bit-for-bit") {
  std::vector<ColorImage> images;
  for (int t = 0; t < 5; ++t) {
    ColorImage img = background(48, 36);
    paint_rect(img, 8 + t, 8, 6, 6, Rgb8{210, 50, 90});
    images.push_back(img);
  }
  LabelImage seed(48, 36, 0);
  paint_mask(seed, 8, 8, 6, 6, 9);
  const auto a = track_sequence(images, {{0, seed}}, {});
  const auto b = track_sequence(images, {{0, seed}}, {});
  REQUIRE(a.size() == b.size());
  for (size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].data == b[t].data);
    for (uint16_t l : a[t].data) {
      CHECK((l == 0 || l == 9));
    }
  }
}

TEST_SUITE_END();
