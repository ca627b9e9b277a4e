#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <vector>

#include "proteotask/errors.hpp"

namespace proteotask {

inline constexpr int kGapOpen = -10;   // charged for the first gap symbol
inline constexpr int kGapExtend = -1;  // each further symbol in the same gap

namespace detail {

inline constexpr const char* kBlosumOrder = "ARNDCQEGHILKMFPSTWYV";

inline constexpr std::array<std::array<int, 20>, 20> kBlosum62 = {{
    {4, -1, -2, -2, 0, -1, -1, 0, -2, -1, -1, -1, -1, -2, -1, 1, 0, -3, -2, 0},
    {-1, 5, 0, -2, -3, 1, 0, -2, 0, -3, -2, 2, -1, -3, -2, -1, -1, -3, -2, -3},
    {-2, 0, 6, 1, -3, 0, 0, 0, 1, -3, -3, 0, -2, -3, -2, 1, 0, -4, -2, -3},
    {-2, -2, 1, 6, -3, 0, 2, -1, -1, -3, -4, -1, -3, -3, -1, 0, -1, -4, -3, -3},
    {0, -3, -3, -3, 9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1},
    {-1, 1, 0, 0, -3, 5, 2, -2, 0, -3, -2, 1, 0, -3, -1, 0, -1, -2, -1, -2},
    {-1, 0, 0, 2, -4, 2, 5, -2, 0, -3, -3, 1, -2, -3, -1, 0, -1, -3, -2, -2},
    {0, -2, 0, -1, -3, -2, -2, 6, -2, -4, -4, -2, -3, -3, -2, 0, -2, -2, -3, -3},
    {-2, 0, 1, -1, -3, 0, 0, -2, 8, -3, -3, -1, -2, -1, -2, -1, -2, -2, 2, -3},
    {-1, -3, -3, -3, -1, -3, -3, -4, -3, 4, 2, -3, 1, 0, -3, -2, -1, -3, -1, 3},
    {-1, -2, -3, -4, -1, -2, -3, -4, -3, 2, 4, -2, 2, 0, -3, -2, -1, -2, -1, 1},
    {-1, 2, 0, -1, -3, 1, 1, -2, -1, -3, -2, 5, -1, -3, -1, 0, -1, -3, -2, -2},
    {-1, -1, -2, -3, -1, 0, -2, -3, -2, 1, 2, -1, 5, 0, -2, -1, -1, -1, -1, 1},
    {-2, -3, -3, -3, -2, -3, -3, -3, -1, 0, 0, -3, 0, 6, -4, -2, -2, 1, 3, -1},
    {-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4, 7, -1, -1, -4, -3, -2},
    {1, -1, 1, 0, -1, 0, 0, 0, -1, -2, -2, 0, -1, -2, -1, 4, 1, -3, -2, -2},
    {0, -1, 0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1, 1, 5, -2, -2, 0},
    {-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1, 1, -4, -3, -2, 11, 2, -3},
    {-2, -2, -2, -3, -2, -1, -2, -3, 2, -1, -1, -2, -1, 3, -3, -2, -2, 2, 7, -1},
    {0, -3, -3, -3, -1, -2, -2, -3, -3, 3, 1, -2, 1, -1, -2, -2, 0, -3, -1, 4},
}};

inline int blosum_index(char aa) {
  const char* order = kBlosumOrder;
  for (int i = 0; i < 20; ++i)
    if (order[i] == aa) return i;
  return -1;
}

}  // namespace detail

// Standard half-bit BLOSUM62; X and anything unknown score -1 against all.
inline int blosum62(char a, char b) {
  int i = detail::blosum_index(a), j = detail::blosum_index(b);
  if (i < 0 || j < 0) return -1;
  return detail::kBlosum62[i][j];
}

struct Alignment {
  std::string a, b;  // equal length, '-' marks gaps
  int score = 0;
};

// Needleman-Wunsch with affine gaps (Gotoh). A gap of length L costs
// kGapOpen + (L-1)*kGapExtend. Tied traceback prefers diagonal, then a gap
// in b (consuming a), then a gap in a.
inline Alignment global_align(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  Alignment out;
  if (n == 0 || m == 0) {
    out.a = n ? a : std::string(m, '-');
    out.b = m ? b : std::string(n, '-');
    size_t len = std::max(n, m);
    out.score = len ? kGapOpen + static_cast<int>(len - 1) * kGapExtend : 0;
    return out;
  }

  constexpr int kNegInf = std::numeric_limits<int>::min() / 4;
  auto idx = [m](size_t i, size_t j) { return i * (m + 1) + j; };
  std::vector<int> M((n + 1) * (m + 1), kNegInf);
  std::vector<int> Ix = M, Iy = M;

  M[idx(0, 0)] = 0;
  for (size_t i = 1; i <= n; ++i) Ix[idx(i, 0)] = kGapOpen + static_cast<int>(i - 1) * kGapExtend;
  for (size_t j = 1; j <= m; ++j) Iy[idx(0, j)] = kGapOpen + static_cast<int>(j - 1) * kGapExtend;

  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int diag = std::max({M[idx(i - 1, j - 1)], Ix[idx(i - 1, j - 1)], Iy[idx(i - 1, j - 1)]});
      M[idx(i, j)] = diag + blosum62(a[i - 1], b[j - 1]);
      Ix[idx(i, j)] = std::max(M[idx(i - 1, j)] + kGapOpen, Ix[idx(i - 1, j)] + kGapExtend);
      Iy[idx(i, j)] = std::max(M[idx(i, j - 1)] + kGapOpen, Iy[idx(i, j - 1)] + kGapExtend);
    }
  }

  size_t i = n, j = m;
  int state;  // 0 diag, 1 up, 2 left
  {
    int best = M[idx(n, m)];
    state = 0;
    if (Ix[idx(n, m)] > best) {
      best = Ix[idx(n, m)];
      state = 1;
    }
    if (Iy[idx(n, m)] > best) {
      best = Iy[idx(n, m)];
      state = 2;
    }
    out.score = best;
  }

  std::string ra, rb;
  while (i > 0 || j > 0) {
    if (state == 0 && i > 0 && j > 0) {
      ra += a[i - 1];
      rb += b[j - 1];
      int need = M[idx(i, j)] - blosum62(a[i - 1], b[j - 1]);
      --i;
      --j;
      if (M[idx(i, j)] == need)
        state = 0;
      else if (Ix[idx(i, j)] == need)
        state = 1;
      else
        state = 2;
    } else if (state == 1 && i > 0) {
      ra += a[i - 1];
      rb += '-';
      int cur = Ix[idx(i, j)];
      bool from_open = M[idx(i - 1, j)] + kGapOpen == cur;
      --i;
      state = from_open ? 0 : 1;
    } else if (state == 2 && j > 0) {
      ra += '-';
      rb += b[j - 1];
      int cur = Iy[idx(i, j)];
      bool from_open = M[idx(i, j - 1)] + kGapOpen == cur;
      --j;
      state = from_open ? 0 : 2;
    } else {
      // only one sequence left to consume
      state = i > 0 ? 1 : 2;
    }
  }
  std::reverse(ra.begin(), ra.end());
  std::reverse(rb.begin(), rb.end());
  out.a = std::move(ra);
  out.b = std::move(rb);
  return out;
}

}  // namespace proteotask
