#include "sketchseg/homotrans.hpp"

#include <array>

namespace sketchseg {

BinaryImage binarize(const GrayImage& img, const HtConfig& cfg) {
  BinaryImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = img.data[i] < cfg.threshold ? 1 : 0;
  return out;
}

namespace {

// Neighbors in the classic thinning order: p[0]=N, p[1]=NE, p[2]=E, p[3]=SE,
// p[4]=S, p[5]=SW, p[6]=W, p[7]=NW. Out-of-image pixels are background.
inline void fetch_ring(const BinaryImage& m, int x, int y, std::array<int, 8>& p) {
  const int w = m.width, h = m.height;
  auto get = [&](int xx, int yy) -> int {
    return (xx >= 0 && xx < w && yy >= 0 && yy < h) ? m.data[static_cast<std::size_t>(yy) * w + xx]
                                                    : 0;
  };
  p[0] = get(x, y - 1);
  p[1] = get(x + 1, y - 1);
  p[2] = get(x + 1, y);
  p[3] = get(x + 1, y + 1);
  p[4] = get(x, y + 1);
  p[5] = get(x - 1, y + 1);
  p[6] = get(x - 1, y);
  p[7] = get(x - 1, y - 1);
}

// Crossing number: count of distinct foreground runs around the ring. A pixel
// whose ring has exactly one run can be removed without splitting its blob.
inline int crossing_number(const std::array<int, 8>& p) {
  return ((p[0] ^ 1) & (p[1] | p[2])) + ((p[2] ^ 1) & (p[3] | p[4])) +
         ((p[4] ^ 1) & (p[5] | p[6])) + ((p[6] ^ 1) & (p[7] | p[0]));
}

bool guo_hall_pass(BinaryImage& m, int parity) {
  const int w = m.width, h = m.height;
  std::vector<std::uint32_t> kill;
  std::array<int, 8> p;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.at(x, y)) continue;
      fetch_ring(m, x, y, p);
      int c = crossing_number(p);
      if (c != 1) continue;
      int n1 = (p[7] | p[0]) + (p[1] | p[2]) + (p[3] | p[4]) + (p[5] | p[6]);
      int n2 = (p[0] | p[1]) + (p[2] | p[3]) + (p[4] | p[5]) + (p[6] | p[7]);
      int n = n1 < n2 ? n1 : n2;
      if (n < 2 || n > 3) continue;
      int gate = parity == 0 ? ((p[4] | p[5] | (p[7] ^ 1)) & p[6])
                             : ((p[0] | p[1] | (p[3] ^ 1)) & p[2]);
      if (gate == 0) kill.push_back(static_cast<std::uint32_t>(y) * w + x);
    }
  }
  for (std::uint32_t idx : kill) m.data[idx] = 0;
  return !kill.empty();
}

inline bool in_2x2_block(const BinaryImage& m, int x, int y) {
  const int w = m.width, h = m.height;
  auto solid = [&](int x0, int y0) {
    return x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h && m.at(x0, y0) && m.at(x0 + 1, y0) &&
           m.at(x0, y0 + 1) && m.at(x0 + 1, y0 + 1);
  };
  return solid(x, y) || solid(x - 1, y) || solid(x, y - 1) || solid(x - 1, y - 1);
}

// Removes residual 2x2 blocks the parallel passes left behind. Sequential
// deletion of ring-simple members keeps the component count; when a block has
// no simple member (only possible when every member carries its own diagonal
// appendage), its top-left pixel goes regardless so the thinness guarantee is
// unconditional. Returns whether anything was removed.
bool dissolve_thick_blocks(BinaryImage& m) {
  const int w = m.width, h = m.height;
  bool any = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y + 1 < h; ++y) {
      for (int x = 0; x + 1 < w; ++x) {
        if (!(m.at(x, y) && m.at(x + 1, y) && m.at(x, y + 1) && m.at(x + 1, y + 1))) continue;
        const int cand[4][2] = {{x, y}, {x + 1, y}, {x, y + 1}, {x + 1, y + 1}};
        int pick = 0;
        std::array<int, 8> p;
        for (int i = 0; i < 4; ++i) {
          fetch_ring(m, cand[i][0], cand[i][1], p);
          if (crossing_number(p) == 1) {
            pick = i;
            break;
          }
        }
        m.set(cand[pick][0], cand[pick][1], false);
        changed = true;
        any = true;
      }
    }
  }
  return any;
}

}  // namespace

BinaryImage skeletonize(const BinaryImage& mask) {
  // The cleanup can expose new thinning opportunities, so both run inside one
  // fixpoint loop; the result is unchanged under a second skeletonize call.
  BinaryImage m = mask;
  while (true) {
    bool changed = true;
    while (changed) {
      changed = guo_hall_pass(m, 0);
      changed |= guo_hall_pass(m, 1);
    }
    if (!dissolve_thick_blocks(m)) break;
  }
  return m;
}

GrayImage homogeneous_transform(const GrayImage& img, const HtConfig& cfg) {
  BinaryImage centerline = skeletonize(binarize(img, cfg));
  GrayImage out(img.width, img.height, 255);
  for (std::size_t i = 0; i < centerline.data.size(); ++i)
    if (centerline.data[i]) out.data[i] = 0;
  return out;
}

}  // namespace sketchseg
