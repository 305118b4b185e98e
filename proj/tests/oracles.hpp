#pragma once
// Brute-force reference implementations used only by tests. They follow the
// definitions directly and share no code with the library's fast paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "bruv/core.hpp"
#include "bruv/metrics.hpp"
#include "bruv/raster.hpp"

namespace oracle {

// Overlap by explicit interval arithmetic.
inline double overlap_ratio(const bruv::BBox& a, const bruv::BBox& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
};

// Every partial matching of rows to columns, visited recursively.
inline void enumerate_matchings(std::size_t rows, std::size_t cols,
                                const std::function<bool(std::size_t, std::size_t)>& allowed,
                                const std::function<void(const std::vector<std::pair<std::size_t, std::size_t>>&)>& visit) {
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  std::vector<char> used(cols, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t r) {
    if (r == rows) {
      visit(cur);
      return;
    }
    rec(r + 1);  // row r unmatched
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c] || !allowed(r, c)) continue;
      used[c] = 1;
      cur.emplace_back(r, c);
      rec(r + 1);
      cur.pop_back();
      used[c] = 0;
    }
  };
  rec(0);
}

// Minimum of sum(pair cost) + limit/2 per unmatched row and column.
inline double best_limited_cost(const std::vector<std::vector<double>>& cost, double limit) {
  const std::size_t rows = cost.size(), cols = rows ? cost[0].size() : 0;
  double best = std::numeric_limits<double>::infinity();
  enumerate_matchings(
      rows, cols, [&](std::size_t r, std::size_t c) { return cost[r][c] <= limit; },
      [&](const auto& pairs) {
        double total = 0.5 * limit * static_cast<double>(rows + cols - 2 * pairs.size());
        for (auto [r, c] : pairs) total += cost[r][c];
        best = std::min(best, total);
      });
  return best;
}

// Largest matching, then smallest cost.
inline std::pair<std::size_t, double> best_max_matching(const std::vector<std::vector<double>>& cost,
                                                        double limit) {
  const std::size_t rows = cost.size(), cols = rows ? cost[0].size() : 0;
  std::pair<std::size_t, double> best{0, 0.0};
  bool first = true;
  enumerate_matchings(
      rows, cols, [&](std::size_t r, std::size_t c) { return cost[r][c] <= limit; },
      [&](const auto& pairs) {
        double total = 0;
        for (auto [r, c] : pairs) total += cost[r][c];
        if (first || pairs.size() > best.first ||
            (pairs.size() == best.first && total < best.second)) {
          best = {pairs.size(), total};
          first = false;
        }
      });
  return best;
}

// AP: greedy matching by descending confidence, then for every rank the
// interpolated precision is the max precision at any rank with >= recall.
inline double brute_ap(const bruv::DetectionEvalSet& eval, const std::string& cls) {
  struct P {
    double conf;
    std::size_t f, i;
  };
  std::vector<P> preds;
  std::size_t gt_total = 0;
  for (std::size_t f = 0; f < eval.frames.size(); ++f) {
    for (std::size_t i = 0; i < eval.frames[f].predictions.size(); ++i) {
      if (eval.frames[f].predictions[i].cls == cls) preds.push_back({eval.frames[f].predictions[i].confidence, f, i});
    }
    for (const auto& t : eval.frames[f].truth) gt_total += t.cls == cls;
  }
  if (gt_total == 0 || preds.empty()) return 0.0;
  // Insertion sort: stable, descending confidence.
  for (std::size_t a = 1; a < preds.size(); ++a) {
    for (std::size_t b = a; b > 0 && preds[b - 1].conf < preds[b].conf; --b) std::swap(preds[b - 1], preds[b]);
  }
  std::map<std::pair<std::size_t, std::size_t>, bool> taken;
  std::vector<double> prec, rec;
  double tp = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto& fr = eval.frames[preds[k].f];
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t g = 0; g < fr.truth.size(); ++g) {
      if (fr.truth[g].cls != cls || taken[{preds[k].f, g}]) continue;
      const double o = overlap_ratio(fr.predictions[preds[k].i].box, fr.truth[g].box);
      if (o > best) best = o, arg = g;
    }
    if (best >= eval.iou_threshold) {
      taken[{preds[k].f, arg}] = true;
      tp += 1;
    }
    prec.push_back(tp / static_cast<double>(k + 1));
    rec.push_back(tp / static_cast<double>(gt_total));
  }
  double ap = 0, last_r = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    double env = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      if (rec[j] >= rec[k]) env = std::max(env, prec[j]);
    }
    if (rec[k] > last_r) {
      ap += (rec[k] - last_r) * env;
      last_r = rec[k];
    }
  }
  return ap;
}

// True positives of one class among predictions with confidence >= min_conf,
// matched greedily in descending confidence.
inline std::size_t brute_true_positives(const bruv::DetectionEvalSet& eval, const std::string& cls,
                                        double min_conf) {
  struct P {
    double conf;
    std::size_t f, i;
  };
  std::vector<P> preds;
  for (std::size_t f = 0; f < eval.frames.size(); ++f)
    for (std::size_t i = 0; i < eval.frames[f].predictions.size(); ++i) {
      const auto& p = eval.frames[f].predictions[i];
      if (p.cls == cls && p.confidence >= min_conf) preds.push_back({p.confidence, f, i});
    }
  for (std::size_t a = 1; a < preds.size(); ++a)
    for (std::size_t b = a; b > 0 && preds[b - 1].conf < preds[b].conf; --b) std::swap(preds[b - 1], preds[b]);
  std::map<std::pair<std::size_t, std::size_t>, bool> taken;
  std::size_t tp = 0;
  for (const auto& p : preds) {
    const auto& fr = eval.frames[p.f];
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t g = 0; g < fr.truth.size(); ++g) {
      if (fr.truth[g].cls != cls || taken[{p.f, g}]) continue;
      const double o = overlap_ratio(fr.predictions[p.i].box, fr.truth[g].box);
      if (o > best) best = o, arg = g;
    }
    if (best >= eval.iou_threshold) {
      taken[{p.f, arg}] = true;
      ++tp;
    }
  }
  return tp;
}

// CLEAR-MOT by enumeration of every per-frame matching.
inline bruv::MotaResult brute_mota(const bruv::MOTEvalSet& eval) {
  bruv::MotaResult out;
  std::map<std::int64_t, std::int64_t> last, prev;
  for (const auto& fr : eval.frames) {
    out.gt_count += static_cast<std::int64_t>(fr.truth.size());
    std::vector<std::pair<std::size_t, std::size_t>> keep;
    std::vector<char> gu(fr.truth.size(), 0), pu(fr.predictions.size(), 0);
    for (std::size_t g = 0; g < fr.truth.size(); ++g) {
      if (!prev.count(fr.truth[g].id)) continue;
      for (std::size_t p = 0; p < fr.predictions.size(); ++p) {
        if (fr.predictions[p].id == prev[fr.truth[g].id] &&
            overlap_ratio(fr.truth[g].box, fr.predictions[p].box) >= eval.iou_threshold) {
          keep.emplace_back(g, p);
          gu[g] = pu[p] = 1;
        }
      }
    }
    std::vector<std::size_t> og, op;
    for (std::size_t g = 0; g < fr.truth.size(); ++g) if (!gu[g]) og.push_back(g);
    for (std::size_t p = 0; p < fr.predictions.size(); ++p) if (!pu[p]) op.push_back(p);
    std::vector<std::pair<std::size_t, std::size_t>> best_pairs;
    double best_cost = 0;
    bool first = true;
    enumerate_matchings(
        og.size(), op.size(),
        [&](std::size_t r, std::size_t c) {
          return overlap_ratio(fr.truth[og[r]].box, fr.predictions[op[c]].box) >= eval.iou_threshold;
        },
        [&](const auto& pairs) {
          double cost = 0;
          for (auto [r, c] : pairs) cost += 1 - overlap_ratio(fr.truth[og[r]].box, fr.predictions[op[c]].box);
          if (first || pairs.size() > best_pairs.size() ||
              (pairs.size() == best_pairs.size() && cost < best_cost)) {
            best_pairs = pairs;
            best_cost = cost;
            first = false;
          }
        });
    for (auto [r, c] : best_pairs) keep.emplace_back(og[r], op[c]);
    prev.clear();
    for (auto [g, p] : keep) {
      const auto gid = fr.truth[g].id, tid = fr.predictions[p].id;
      if (last.count(gid) && last[gid] != tid) ++out.idsw;
      last[gid] = tid;
      prev[gid] = tid;
    }
    out.fn += static_cast<std::int64_t>(fr.truth.size() - keep.size());
    out.fp += static_cast<std::int64_t>(fr.predictions.size() - keep.size());
  }
  out.mota = 1.0 - static_cast<double>(out.fp + out.fn + out.idsw) / static_cast<double>(out.gt_count);
  return out;
}

// ssMaxN by hashing (species, frame) -> count.
inline std::map<std::string, int> brute_ssmaxn(const std::vector<bruv::Track>& tracks) {
  std::unordered_map<std::string, int> counts;
  for (const auto& t : tracks) {
    if (t.rejected) continue;
    const std::string sp = t.label ? t.label->name() : "unclassified";
    for (const auto& d : t.detections) ++counts[sp + "#" + std::to_string(d.frame_index)];
  }
  std::map<std::string, int> out;
  for (const auto& [key, n] : counts) {
    const auto sp = key.substr(0, key.find('#'));
    out[sp] = std::max(out[sp], n);
  }
  return out;
}

// Bounding boxes of 8-connected bright components via union-find.
inline std::vector<bruv::PixelRect> brute_components(const bruv::RasterImage& img, int threshold) {
  const int w = img.width(), h = img.height();
  std::vector<int> parent(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
  auto bright = [&](int r, int c) {
    const auto p = img.at(r, c);
    // round(v) > t  <=>  v >= t + 0.5, with v scaled by 1000.
    return 299 * p.r + 587 * p.g + 114 * p.b >= 1000 * threshold + 500;
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!bright(r, c)) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nc < 0 || nr >= h || nc >= w || !bright(nr, nc)) continue;
          parent[root(r * w + c)] = root(nr * w + nc);
        }
      }
    }
  }
  std::map<int, bruv::PixelRect> boxes;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!bright(r, c)) continue;
      const int k = root(r * w + c);
      auto it = boxes.find(k);
      if (it == boxes.end()) {
        boxes[k] = {r, c, r, c};
      } else {
        auto& b = it->second;
        b.top = std::min(b.top, r), b.bottom = std::max(b.bottom, r);
        b.left = std::min(b.left, c), b.right = std::max(b.right, c);
      }
    }
  }
  std::vector<bruv::PixelRect> out;
  for (auto& [k, b] : boxes) out.push_back(b);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
