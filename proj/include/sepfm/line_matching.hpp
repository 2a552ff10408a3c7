#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sepfm/minimal_solvers.hpp"
#include "sepfm/random.hpp"

namespace sepfm {

// The full set of putative matches between two images, with the declared
// image bounds. Indices of the contained pairs are positional (pairs[i].index
// == i) so membership bitsets line up with ids.
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  int width1 = 0, height1 = 0;
  int width2 = 0, height2 = 0;

  int size() const { return static_cast<int>(pairs.size()); }
};

struct HoughParams {
  double rho_step = 1.0;                    // accumulator bin, grid px
  double theta_step = 0.017453292519943295;  // 1 degree, radians
  int min_votes = 4;
  int target_width = 512;                   // rasterization width
  double neighbor_distance = 2.0;           // point-to-line gate C, grid px
  int subsample = 0;                        // 0 = vote with every point
};

// Bit-per-cell occupancy grid at the rasterized resolution. `scale` maps
// original coordinates to grid coordinates (grid = scale * original).
struct BinaryGrid {
  int width = 0, height = 0;
  double scale = 1.0;
  std::vector<std::uint8_t> cells;

  bool test(int x, int y) const { return cells[static_cast<size_t>(y) * width + x] != 0; }
  int count() const;
};

// Minimal fixed-size bitset over correspondence indices.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(int n) : n_(n), blocks_((n + 63) / 64, 0) {}

  void set(int i) { blocks_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool test(int i) const { return (blocks_[i >> 6] >> (i & 63)) & 1; }
  int size() const { return n_; }

  int count() const {
    int c = 0;
    for (const std::uint64_t b : blocks_) c += std::popcount(b);
    return c;
  }

  static int and_count(const Bitset& a, const Bitset& b) {
    int c = 0;
    for (size_t i = 0; i < a.blocks_.size(); ++i) {
      c += std::popcount(a.blocks_[i] & b.blocks_[i]);
    }
    return c;
  }

  template <typename Fn>
  void for_each_and(const Bitset& other, Fn&& fn) const {
    for (size_t i = 0; i < blocks_.size(); ++i) {
      std::uint64_t w = blocks_[i] & other.blocks_[i];
      while (w) {
        const int bit = std::countr_zero(w);
        fn(static_cast<int>(i * 64 + bit));
        w &= w - 1;
      }
    }
  }

 private:
  int n_ = 0;
  std::vector<std::uint64_t> blocks_;
};

// Joint vote table over (correspondence j, image-1 line m, image-2 line n),
// stored factored: one membership bitset per line and image. The implied
// dense entry is
//   A(j, m, n) = [m in D1(j)] + [n in D2(j)]  in {0, 1, 2},
// i.e. the result of one increment pass per image, where D1(j)/D2(j) are the
// lines within the distance gate of correspondence j.
struct Accumulator {
  int n = 0;   // correspondences
  int k1 = 0;  // image-1 lines
  int k2 = 0;  // image-2 lines
  std::vector<Bitset> members1;  // k1 bitsets over correspondences
  std::vector<Bitset> members2;  // k2 bitsets over correspondences

  int entry(int j, int m, int nn) const {
    return (members1[m].test(j) ? 1 : 0) + (members2[nn].test(j) ? 1 : 0);
  }

  // Number of correspondences voting for the pair on both sides. This is
  // the pair score used for selection.
  int joint_score(int m, int nn) const {
    return Bitset::and_count(members1[m], members2[nn]);
  }

  // Literal per-axis vote sum over j (diagnostic). Note this separates into
  // |members1[m]| + |members2[n]|, so its argmax ignores the coupling the
  // joint score captures.
  long plain_vote_sum(int m, int nn) const {
    return static_cast<long>(members1[m].count()) + members2[nn].count();
  }
};

// A matched line pair with the correspondences that support it. Lines are at
// original image resolution; members lie within the rescaled gate of both.
struct LineMatch {
  ImageLine line1, line2;
  std::vector<int> member_indices;
  int score = 0;
};

// Occupancy grid of the points at width target_width (no upscaling), height
// scaled to preserve aspect. Coordinates are rounded to the nearest cell.
BinaryGrid rasterize(std::span<const HomogeneousPoint> points, int width,
                     int height, int target_width);

// (rho, theta) voting over the set cells: one vote per cell per theta bin.
// Peaks keep >= min_votes after 3x3 non-maximum suppression (theta wraps
// with rho negated) and are returned by descending votes, coefficients
// mapped back to original resolution.
std::vector<ImageLine> hough_lines(const BinaryGrid& grid,
                                   const HoughParams& params);

// Indices of the lines strictly closer than c to the point.
std::vector<int> nearby_lines(const HomogeneousPoint& p,
                              std::span<const ImageLine> lines, double c);

// Builds the factored vote table. The two passes touch disjoint state and
// run concurrently when `parallel` is set; c1/c2 are the distance gates for
// image 1 and image 2 (original resolution).
Accumulator build_accumulator(const CorrespondenceSet& corrs,
                              std::span<const ImageLine> lines1,
                              std::span<const ImageLine> lines2, double c1,
                              double c2, bool parallel = true);

// Pair with the largest joint score (>= 4 required); exact ties are broken
// by a draw from rng.
std::optional<LineMatch> best_line_pair(const Accumulator& acc,
                                        const CorrespondenceSet& corrs,
                                        std::span<const ImageLine> lines1,
                                        std::span<const ImageLine> lines2,
                                        double c1, double c2, Rng& rng);

// Full pipeline: rasterize both images, detect lines, accumulate joint
// votes, pick the best pair, then refine both lines by a total-least-squares
// fit to the member points at original resolution (kept only if >= 4 members
// survive re-gating against the refined lines). Returns nothing when either
// image yields no lines or no pair reaches 4 joint members.
std::optional<LineMatch> find_line_match(const CorrespondenceSet& corrs,
                                         const HoughParams& params,
                                         std::uint64_t seed = 0);

}  // namespace sepfm
