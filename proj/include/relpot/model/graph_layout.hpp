#pragma once

#include "relpot/core/trajectory.hpp"

namespace relpot {

// Row-index builders tying the flat matrix layouts together.
//   trajectories: rows (b, t, n)
//   edge streams: rows (b, e, t) or (b, e, l, t)
//   latents:      rows (b, e, l)
//   node feats:   rows (b, n) or (b, n, w)
namespace layout {

// Rows of node `pick(edge)` over time for every (b, e): maps edge-stream rows
// (b, e, t) into trajectory rows (b, t, n).
template <typename Pick>
std::vector<int> edge_time_rows(int B, int T, int N, const EdgeIndex& edges,
                                Pick pick) {
  const int E = edges.size();
  std::vector<int> idx(static_cast<std::size_t>(B) * E * T);
  std::size_t w = 0;
  for (int b = 0; b < B; ++b)
    for (int e = 0; e < E; ++e) {
      const int n = pick(edges.pairs[e]);
      for (int t = 0; t < T; ++t) idx[w++] = (b * T + t) * N + n;
    }
  return idx;
}

inline std::vector<int> sender_time_rows(int B, int T, int N,
                                         const EdgeIndex& edges) {
  return edge_time_rows(B, T, N, edges,
                        [](const std::pair<int, int>& p) { return p.first; });
}
inline std::vector<int> receiver_time_rows(int B, int T, int N,
                                           const EdgeIndex& edges) {
  return edge_time_rows(B, T, N, edges,
                        [](const std::pair<int, int>& p) { return p.second; });
}

// (b, e) rows -> (b, receiver) rows, for edge->node sum aggregation.
inline std::vector<int> edge_to_node_rows(int B, int N, const EdgeIndex& edges) {
  const int E = edges.size();
  std::vector<int> idx(static_cast<std::size_t>(B) * E);
  std::size_t w = 0;
  for (int b = 0; b < B; ++b)
    for (int e = 0; e < E; ++e) idx[w++] = b * N + edges.pairs[e].second;
  return idx;
}

// (b, e, l[, c]) rows -> (b, receiver[, c]) rows with `copies` trailing
// replicas (short-term windows).
inline std::vector<int> edge_slot_to_node_rows(int B, int N, int L,
                                               const EdgeIndex& edges,
                                               int copies = 1) {
  const int E = edges.size();
  std::vector<int> idx(static_cast<std::size_t>(B) * E * L * copies);
  std::size_t w = 0;
  for (int b = 0; b < B; ++b)
    for (int e = 0; e < E; ++e)
      for (int l = 0; l < L; ++l)
        for (int c = 0; c < copies; ++c)
          idx[w++] = (b * N + edges.pairs[e].second) * copies + c;
  return idx;
}

// Replicate (b, e, [t]) rows L times into (b, e, l, [t]).
inline std::vector<int> replicate_per_slot(int BE, int L, int inner = 1) {
  std::vector<int> idx(static_cast<std::size_t>(BE) * L * inner);
  std::size_t w = 0;
  for (int s = 0; s < BE; ++s)
    for (int l = 0; l < L; ++l)
      for (int t = 0; t < inner; ++t) idx[w++] = s * inner + t;
  return idx;
}

// Maps (stream, inner) rows back to stream rows (broadcast of per-stream data).
inline std::vector<int> stream_of_inner(int streams, int inner) {
  std::vector<int> idx(static_cast<std::size_t>(streams) * inner);
  std::size_t w = 0;
  for (int s = 0; s < streams; ++s)
    for (int t = 0; t < inner; ++t) idx[w++] = s;
  return idx;
}

// (b, n) rows -> b rows: per-sample reduction of node quantities.
inline std::vector<int> node_to_sample_rows(int B, int N) {
  std::vector<int> idx(static_cast<std::size_t>(B) * N);
  std::size_t w = 0;
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) idx[w++] = b;
  return idx;
}

// Unfold (stream, t) rows into (stream, window, k) rows; reshaped by the
// caller into [streams*windows, k*C].
inline std::vector<int> unfold_rows(int streams, int T, int kernel,
                                    int stride) {
  const int W = (T - kernel) / stride + 1;
  std::vector<int> idx(static_cast<std::size_t>(streams) * W * kernel);
  std::size_t w = 0;
  for (int s = 0; s < streams; ++s)
    for (int win = 0; win < W; ++win)
      for (int k = 0; k < kernel; ++k) idx[w++] = s * T + win * stride + k;
  return idx;
}

}  // namespace layout
}  // namespace relpot
