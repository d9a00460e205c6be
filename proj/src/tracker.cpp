#include "labelfuse/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace labelfuse {

void TrackerConfig::validate() const {
  if (search_radius < 0) {
    throw InvalidInputError("tracker: search radius must be >= 0");
  }
  if (color_threshold < 0 || color_threshold > 1) {
    throw InvalidInputError("tracker: color threshold must be in [0, 1]");
  }
  if (min_region_area < 1) {
    throw InvalidInputError("tracker: minimum region area must be >= 1");
  }
}

namespace {

// Euclidean RGB distance scaled to [0, 1].
double color_distance(Rgb8 a, Rgb8 b) {
  const double dr = double(a.r) - b.r;
  const double dg = double(a.g) - b.g;
  const double db = double(a.b) - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db) / (255.0 * std::sqrt(3.0));
}

struct Pixel {
  int x, y;
};

struct Shift {
  int dx = 0, dy = 0;
  long score = -1;

  bool better_than(const Shift& o) const {
    if (score != o.score) return score > o.score;
    const int r2 = dx * dx + dy * dy, or2 = o.dx * o.dx + o.dy * o.dy;
    if (r2 != or2) return r2 < or2;
    if (dx != o.dx) return dx < o.dx;
    return dy < o.dy;
  }
};

}  // namespace

PropagationResult propagate_mask(const ColorImage& current,
                                 const ColorImage& previous,
                                 const LabelImage& previous_mask,
                                 const TrackerConfig& cfg) {
  cfg.validate();
  if (!current.same_size(previous) || !current.same_size(previous_mask)) {
    throw InvalidInputError("propagate_mask: image dimensions differ");
  }
  const int w = current.width, h = current.height;

  std::map<uint16_t, std::vector<Pixel>> regions;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const uint16_t label = previous_mask.at(x, y);
      if (label != 0) {
        regions[label].push_back({x, y});
      }
    }
  }
  if (regions.empty()) {
    throw NoSeedError("propagate_mask: previous mask has no labels");
  }

  // Per-label appearance model: the region's mean color in the previous
  // frame.
  std::map<uint16_t, Vec3> mean_color;
  for (const auto& [label, pixels] : regions) {
    Vec3 sum = Vec3::Zero();
    for (const Pixel& p : pixels) {
      const Rgb8 c = previous.at(p.x, p.y);
      sum += Vec3(c.r, c.g, c.b);
    }
    mean_color[label] = sum / double(pixels.size());
  }

  // Per-label best integer translation by color agreement; ties break
  // toward the smaller displacement, then lexicographic (dx, dy).
  std::map<uint16_t, std::vector<Pixel>> shifted;
  for (const auto& [label, pixels] : regions) {
    Shift best;
    for (int dy = -cfg.search_radius; dy <= cfg.search_radius; ++dy) {
      for (int dx = -cfg.search_radius; dx <= cfg.search_radius; ++dx) {
        long score = 0;
        for (const Pixel& p : pixels) {
          const int nx = p.x + dx, ny = p.y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
            continue;
          }
          if (color_distance(current.at(nx, ny), previous.at(p.x, p.y)) <=
              cfg.color_threshold) {
            ++score;
          }
        }
        const Shift candidate{dx, dy, score};
        if (candidate.better_than(best)) {
          best = candidate;
        }
      }
    }
    std::vector<Pixel> moved;
    for (const Pixel& p : pixels) {
      const int nx = p.x + best.dx, ny = p.y + best.dy;
      if (nx >= 0 && ny >= 0 && nx < w && ny < h) {
        moved.push_back({nx, ny});
      }
    }
    shifted[label] = std::move(moved);
  }

  const auto agreement = [&](uint16_t label, int x, int y) {
    const Vec3& m = mean_color.at(label);
    const Rgb8 c = current.at(x, y);
    const Vec3 d = Vec3(c.r, c.g, c.b) - m;
    return d.norm() / (255.0 * std::sqrt(3.0));
  };

  // Resolve overlapping claims: higher color agreement (smaller distance
  // to the claimant's mean) wins, remaining ties go to the lower id.
  LabelImage claimed(w, h, 0);
  for (const auto& [label, pixels] : shifted) {
    for (const Pixel& p : pixels) {
      const uint16_t prev = claimed.at(p.x, p.y);
      if (prev == 0) {
        claimed.at(p.x, p.y) = label;
      } else if (agreement(label, p.x, p.y) < agreement(prev, p.x, p.y)) {
        claimed.at(p.x, p.y) = label;
      }
    }
  }

  // Boundary refinement against the appearance model, iterated to a fixed
  // point: boundary pixels dissimilar to their label's previous-frame mean
  // are peeled off, unclaimed neighbors similar to it are grown. Each pixel
  // flips at most once, so this terminates.
  constexpr int kNeighbors[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  LabelImage refined = claimed;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::pair<Pixel, uint16_t>> removes;
    std::map<std::pair<int, int>, std::pair<double, uint16_t>> grows;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const uint16_t label = refined.at(x, y);
        if (label != 0) {
          bool boundary = false;
          for (const auto& n : kNeighbors) {
            const int nx = x + n[0], ny = y + n[1];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h ||
                refined.at(nx, ny) != label) {
              boundary = true;
              break;
            }
          }
          if (boundary && agreement(label, x, y) > cfg.color_threshold) {
            removes.push_back({Pixel{x, y}, label});
          }
        } else {
          for (const auto& n : kNeighbors) {
            const int nx = x + n[0], ny = y + n[1];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
              continue;
            }
            const uint16_t neighbor = refined.at(nx, ny);
            if (neighbor == 0) {
              continue;
            }
            const double d = agreement(neighbor, x, y);
            if (d <= cfg.color_threshold) {
              const auto key = std::make_pair(x, y);
              const auto it = grows.find(key);
              if (it == grows.end() || d < it->second.first ||
                  (d == it->second.first && neighbor < it->second.second)) {
                grows[key] = {d, neighbor};
              }
            }
          }
        }
      }
    }
    for (const auto& [pixel, label] : removes) {
      refined.at(pixel.x, pixel.y) = 0;
      changed = true;
    }
    for (const auto& [pixel, claim] : grows) {
      refined.at(pixel.first, pixel.second) = claim.second;
      changed = true;
    }
  }

  // Minimum-area check.
  std::map<uint16_t, long> areas;
  for (uint16_t label : refined.data) {
    if (label != 0) {
      ++areas[label];
    }
  }
  PropagationResult result;
  result.mask = LabelImage(w, h, 0);
  for (const auto& [label, unused] : regions) {
    (void)unused;
    const auto it = areas.find(label);
    if (it == areas.end() || it->second < cfg.min_region_area) {
      result.lost_labels.push_back(label);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const uint16_t label = refined.at(x, y);
      if (label != 0 &&
          !std::binary_search(result.lost_labels.begin(),
                              result.lost_labels.end(), label)) {
        result.mask.at(x, y) = label;
      }
    }
  }
  return result;
}

std::vector<LabelImage> track_sequence(
    const std::vector<ColorImage>& images,
    const std::map<size_t, LabelImage>& seed_masks, const TrackerConfig& cfg) {
  cfg.validate();
  if (!seed_masks.count(0)) {
    throw NoSeedError("track_sequence: no seed mask for frame 0");
  }
  if (images.empty()) {
    throw InvalidInputError("track_sequence: empty image sequence");
  }
  for (const auto& [index, seed] : seed_masks) {
    if (index >= images.size()) {
      throw InvalidInputError("track_sequence: seed index out of range");
    }
    if (!seed.same_size(images[0])) {
      throw InvalidInputError("track_sequence: seed dimensions differ");
    }
  }
  std::vector<LabelImage> out;
  out.reserve(images.size());
  out.push_back(seed_masks.at(0));
  for (size_t t = 1; t < images.size(); ++t) {
    const auto seed = seed_masks.find(t);
    if (seed != seed_masks.end()) {
      out.push_back(seed->second);
      continue;
    }
    const bool has_labels =
        std::any_of(out.back().data.begin(), out.back().data.end(),
                    [](uint16_t l) { return l != 0; });
    if (!has_labels) {
      out.emplace_back(images[t].width, images[t].height, 0);
      continue;
    }
    out.push_back(
        propagate_mask(images[t], images[t - 1], out.back(), cfg).mask);
  }
  return out;
}

}  // namespace labelfuse
