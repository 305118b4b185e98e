#include "bruv/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "bruv/assignment.hpp"
#include "bruv/csv.hpp"
#include "bruv/errors.hpp"
#include "bruv/ingest.hpp"

namespace bruv {

// ---- MaxN accuracy ----------------------------------------------------------

MeanSd mean_and_sample_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / (n - 1.0));
  return out;
}

MaxNAccuracy maxn_accuracy(const std::vector<MaxNComparison>& videos) {
  MaxNAccuracy out;
  std::vector<double> accuracies;
  for (const auto& v : videos) {
    if (v.species.empty()) {
      out.warnings.push_back(fmt::format("video {}: no species to score, excluded", v.video_id));
      continue;
    }
    const auto correct = std::count_if(v.species.begin(), v.species.end(),
                                       [](const SpeciesMaxN& s) { return s.predicted == s.truth; });
    const double acc = static_cast<double>(correct) / static_cast<double>(v.species.size());
    out.per_video.emplace_back(v.video_id, acc);
    accuracies.push_back(acc);
  }
  out.aggregate = mean_and_sample_sd(accuracies);
  return out;
}

std::vector<TruthMaxNRow> read_truth_maxn(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(kTruthMaxNHeader);
  std::vector<TruthMaxNRow> out;
  std::vector<std::string_view> f;
  while (reader.next(f, 3)) {
    const auto maxn = csv::parse_int(f[2], "maxn", reader.line());
    if (maxn < 0) throw ValidationError("maxn must be >= 0", reader.line());
    out.push_back({std::string(f[0]), std::string(f[1]), static_cast<int>(maxn)});
  }
  return out;
}

std::vector<MaxNComparison> compare_maxn(const MaxNReport& predicted,
                                         const std::vector<TruthMaxNRow>& truth) {
  std::map<std::string, std::map<std::string, SpeciesMaxN>> by_video;
  for (const auto& r : predicted) {
    auto& s = by_video[r.video_id][r.species];
    s.species = r.species;
    s.predicted = r.maxn;
  }
  for (const auto& r : truth) {
    auto& s = by_video[r.video_id][r.species];
    s.species = r.species;
    s.truth = r.maxn;
  }
  std::vector<MaxNComparison> out;
  for (auto& [video, species] : by_video) {
    MaxNComparison c{video, {}};
    for (auto& [name, s] : species) c.species.push_back(s);
    out.push_back(std::move(c));
  }
  return out;
}

// ---- precision / recall / F1 -----------------------------------------------

PrecisionRecall precision_recall_f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw std::invalid_argument("counts must be >= 0");
  PrecisionRecall r;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  if (tp + fn > 0) {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    r.recall = fp == 0 ? 1.0 : 0.0;
  }
  const double s = r.precision + r.recall;
  r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

// ---- detection AP -----------------------------------------------------------

double average_precision(const std::vector<bool>& ranked_hits, std::size_t truth_count) {
  if (truth_count == 0 || ranked_hits.empty()) return 0.0;
  const std::size_t n = ranked_hits.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += ranked_hits[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(truth_count);
  }
  for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

namespace {

// Greedy confidence-ordered matching of one class; true marks a hit.
std::vector<bool> ranked_hits(const DetectionEvalSet& eval, const std::string& cls) {
  struct Ranked {
    double confidence;
    std::size_t frame, index;
  };
  std::vector<Ranked> ranked;
  for (std::size_t fi = 0; fi < eval.frames.size(); ++fi) {
    const auto& preds = eval.frames[fi].predictions;
    for (std::size_t pi = 0; pi < preds.size(); ++pi) {
      if (preds[pi].cls == cls) ranked.push_back({preds[pi].confidence, fi, pi});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });

  std::vector<std::vector<char>> used(eval.frames.size());
  for (std::size_t fi = 0; fi < eval.frames.size(); ++fi) {
    used[fi].assign(eval.frames[fi].truth.size(), 0);
  }
  std::vector<bool> hits;
  hits.reserve(ranked.size());
  for (const auto& r : ranked) {
    const auto& frame = eval.frames[r.frame];
    const BBox& box = frame.predictions[r.index].box;
    double best_iou = -1.0;
    std::size_t best = 0;
    for (std::size_t ti = 0; ti < frame.truth.size(); ++ti) {
      if (used[r.frame][ti] || frame.truth[ti].cls != cls) continue;
      const double o = iou(box, frame.truth[ti].box);
      if (o > best_iou) {
        best_iou = o;
        best = ti;
      }
    }
    const bool hit = best_iou >= eval.iou_threshold;
    if (hit) used[r.frame][best] = 1;
    hits.push_back(hit);
  }
  return hits;
}

void check_threshold(const DetectionEvalSet& eval) {
  if (!(eval.iou_threshold > 0.0 && eval.iou_threshold <= 1.0)) {
    throw std::invalid_argument("iou_threshold must lie in (0,1]");
  }
}

}  // namespace

ApResult map50(const DetectionEvalSet& eval) {
  check_threshold(eval);
  std::set<std::string> classes;
  std::map<std::string, std::size_t> truth_count;
  for (const auto& f : eval.frames) {
    for (const auto& t : f.truth) {
      classes.insert(t.cls);
      ++truth_count[t.cls];
    }
    for (const auto& p : f.predictions) classes.insert(p.cls);
  }

  ApResult out;
  std::vector<double> scored;
  for (const auto& cls : classes) {
    const auto hits = ranked_hits(eval, cls);
    const std::size_t n_truth = truth_count.count(cls) ? truth_count.at(cls) : 0;
    if (n_truth == 0) {
      out.warnings.push_back(fmt::format("class {}: predictions but no ground truth, AP = 0", cls));
      out.per_class[cls] = 0.0;
      continue;
    }
    const double ap = average_precision(hits, n_truth);
    out.per_class[cls] = ap;
    scored.push_back(ap);
  }
  out.mean = scored.empty() ? 0.0
                            : std::accumulate(scored.begin(), scored.end(), 0.0) /
                                  static_cast<double>(scored.size());
  return out;
}

PrecisionRecall detection_prf(const DetectionEvalSet& eval, double min_confidence) {
  check_threshold(eval);
  DetectionEvalSet kept = eval;
  std::set<std::string> classes;
  std::int64_t truth = 0, predicted = 0, tp = 0;
  for (auto& f : kept.frames) {
    std::erase_if(f.predictions,
                  [&](const PredictedBox& p) { return p.confidence < min_confidence; });
    for (const auto& t : f.truth) classes.insert(t.cls);
    for (const auto& p : f.predictions) classes.insert(p.cls);
    truth += static_cast<std::int64_t>(f.truth.size());
    predicted += static_cast<std::int64_t>(f.predictions.size());
  }
  for (const auto& cls : classes) {
    for (bool h : ranked_hits(kept, cls)) tp += h ? 1 : 0;
  }
  return precision_recall_f1(tp, predicted - tp, truth - tp);
}

DetectionEvalSet read_detection_eval(std::istream& truth, std::istream& predictions,
                                     double iou_threshold) {
  std::map<std::pair<std::string, std::int64_t>, DetectionFrame> frames;
  std::vector<std::string_view> f;
  auto read_box = [](const std::vector<std::string_view>& f, std::size_t line) {
    const BBox b{csv::parse_real(f[2], "x1", line), csv::parse_real(f[3], "y1", line),
                 csv::parse_real(f[4], "x2", line), csv::parse_real(f[5], "y2", line)};
    if (!b.valid()) throw ValidationError("invalid box", line);
    return b;
  };

  csv::Reader tr(truth);
  tr.expect_header(kDetTruthHeader);
  while (tr.next(f, 7)) {
    const auto line = tr.line();
    auto& fr = frames[{std::string(f[0]), csv::parse_int(f[1], "frame_index", line)}];
    fr.truth.push_back({read_box(f, line), std::string(f[6])});
  }

  csv::Reader pr(predictions);
  pr.expect_header(kDetPredictionHeader);
  while (pr.next(f, 8)) {
    const auto line = pr.line();
    auto& fr = frames[{std::string(f[0]), csv::parse_int(f[1], "frame_index", line)}];
    const double conf = csv::parse_real(f[6], "confidence", line);
    if (conf < 0.0 || conf > 1.0) throw ValidationError("confidence outside [0,1]", line);
    fr.predictions.push_back({read_box(f, line), conf, std::string(f[7])});
  }

  DetectionEvalSet eval;
  eval.iou_threshold = iou_threshold;
  for (auto& [key, fr] : frames) eval.frames.push_back(std::move(fr));
  return eval;
}

// ---- CLEAR-MOT --------------------------------------------------------------

MotaResult& MotaResult::operator+=(const MotaResult& o) {
  fp += o.fp;
  fn += o.fn;
  idsw += o.idsw;
  gt_count += o.gt_count;
  matches += o.matches;
  return *this;
}

MotaResult combine_mota(const std::vector<MotaResult>& parts) {
  MotaResult total;
  for (const auto& p : parts) total += p;
  if (total.gt_count == 0) throw Error("MOTA is undefined without ground-truth boxes");
  total.mota = 1.0 - static_cast<double>(total.fp + total.fn + total.idsw) /
                         static_cast<double>(total.gt_count);
  return total;
}

MotaResult mota(const MOTEvalSet& eval) {
  MotaResult out;
  std::map<std::int64_t, std::int64_t> last_match;  // gt id -> track id
  std::map<std::int64_t, std::int64_t> prev_frame;  // pairs from the previous frame

  for (const auto& frame : eval.frames) {
    const auto& gts = frame.truth;
    const auto& preds = frame.predictions;
    out.gt_count += static_cast<std::int64_t>(gts.size());

    std::vector<char> gt_done(gts.size(), 0), pred_done(preds.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    for (std::size_t g = 0; g < gts.size(); ++g) {
      auto it = prev_frame.find(gts[g].id);
      if (it == prev_frame.end()) continue;
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (pred_done[p] || preds[p].id != it->second) continue;
        if (iou(gts[g].box, preds[p].box) >= eval.iou_threshold) {
          gt_done[g] = pred_done[p] = 1;
          pairs.emplace_back(g, p);
        }
        break;
      }
    }

    std::vector<std::size_t> open_gt, open_pred;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!gt_done[g]) open_gt.push_back(g);
    }
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (!pred_done[p]) open_pred.push_back(p);
    }
    CostMatrix cost(open_gt.size(), open_pred.size());
    for (std::size_t r = 0; r < open_gt.size(); ++r) {
      for (std::size_t c = 0; c < open_pred.size(); ++c) {
        const double o = iou(gts[open_gt[r]].box, preds[open_pred[c]].box);
        cost(r, c) = o >= eval.iou_threshold ? 1.0 - o : 2.0;
      }
    }
    for (const auto& [r, c] : assign_max_matches(cost, 1.0).pairs) {
      pairs.emplace_back(open_gt[r], open_pred[c]);
    }

    prev_frame.clear();
    for (const auto& [g, p] : pairs) {
      const auto gt_id = gts[g].id;
      const auto track_id = preds[p].id;
      auto it = last_match.find(gt_id);
      if (it != last_match.end() && it->second != track_id) ++out.idsw;
      last_match[gt_id] = track_id;
      prev_frame[gt_id] = track_id;
    }
    out.matches += static_cast<std::int64_t>(pairs.size());
    out.fn += static_cast<std::int64_t>(gts.size() - pairs.size());
    out.fp += static_cast<std::int64_t>(preds.size() - pairs.size());
  }

  if (out.gt_count == 0) throw Error("MOTA is undefined without ground-truth boxes");
  out.mota =
      1.0 - static_cast<double>(out.fp + out.fn + out.idsw) / static_cast<double>(out.gt_count);
  return out;
}

std::vector<TruthMotRow> read_truth_mot(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(kTruthMotHeader);
  std::vector<TruthMotRow> out;
  std::vector<std::string_view> f;
  while (reader.next(f, 7)) {
    const auto line = reader.line();
    TruthMotRow r;
    r.video_id = std::string(f[0]);
    r.frame_index = csv::parse_int(f[1], "frame_index", line);
    r.gt_id = csv::parse_int(f[2], "gt_id", line);
    r.box = {csv::parse_real(f[3], "x1", line), csv::parse_real(f[4], "y1", line),
             csv::parse_real(f[5], "x2", line), csv::parse_real(f[6], "y2", line)};
    if (!r.box.valid()) throw ValidationError("invalid box", line);
    out.push_back(std::move(r));
  }
  return out;
}

void write_truth_mot(std::ostream& out, const std::vector<TruthMotRow>& rows) {
  out << kTruthMotHeader << '\n';
  for (const auto& r : rows) {
    out << r.video_id << ',' << r.frame_index << ',' << r.gt_id << ',' << format_fixed6(r.box.x1)
        << ',' << format_fixed6(r.box.y1) << ',' << format_fixed6(r.box.x2) << ','
        << format_fixed6(r.box.y2) << '\n';
  }
}

MOTEvalSet build_mot_eval(const std::vector<TruthMotRow>& truth, const std::vector<Track>& tracks,
                          const std::string& video_id, std::int64_t frame_count,
                          double iou_threshold) {
  MOTEvalSet eval;
  eval.iou_threshold = iou_threshold;
  eval.frames.resize(static_cast<std::size_t>(std::max<std::int64_t>(frame_count, 0)));
  auto in_range = [&](std::int64_t f) { return f >= 0 && f < frame_count; };
  for (const auto& r : truth) {
    if (r.video_id == video_id && in_range(r.frame_index)) {
      eval.frames[static_cast<std::size_t>(r.frame_index)].truth.push_back({r.gt_id, r.box});
    }
  }
  for (const auto& t : tracks) {
    for (const auto& d : t.detections) {
      if (d.video_id == video_id && in_range(d.frame_index)) {
        eval.frames[static_cast<std::size_t>(d.frame_index)].predictions.push_back(
            {t.track_id, d.box});
      }
    }
  }
  return eval;
}

// ---- grid search ------------------------------------------------------------

void GridSpec::validate() const {
  if (axes.empty()) throw std::invalid_argument("grid: at least one axis required");
  std::set<std::string> names;
  for (const auto& a : axes) {
    if (a.values.empty()) throw std::invalid_argument("grid: axis '" + a.name + "' is empty");
    if (!names.insert(a.name).second) {
      throw std::invalid_argument("grid: duplicate axis '" + a.name + "'");
    }
  }
}

std::size_t GridSpec::size() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::vector<double> GridSpec::cell(std::size_t index) const {
  std::vector<double> values(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto& v = axes[k].values;
    values[k] = v[index % v.size()];
    index /= v.size();
  }
  return values;
}

bool better_cell(const GridCell& a, const GridCell& b) {
  if (a.ok != b.ok) return a.ok;
  if (a.result.mota != b.result.mota) return a.result.mota > b.result.mota;
  if (a.result.idsw != b.result.idsw) return a.result.idsw < b.result.idsw;
  return a.values < b.values;
}

namespace {

GridCell evaluate_cell(const GridSpec& grid, const GridRunner& runner, std::size_t index) {
  GridCell cell;
  cell.values = grid.cell(index);
  try {
    cell.result = runner(cell.values);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
  } catch (...) {
    cell.error = "unknown failure";
  }
  return cell;
}

// Fixed-order reduction so the winner does not depend on scheduling.
void pick_best(GridResult& result) {
  for (std::size_t i = 0; i < result.table.size(); ++i) {
    if (!result.table[i].ok) continue;
    if (!result.best || better_cell(result.table[i], result.table[*result.best])) result.best = i;
  }
}

}  // namespace

GridResult grid_search(const GridSpec& grid, const GridRunner& runner) {
  grid.validate();
  GridResult result;
  result.table.resize(grid.size());
  const long long n = static_cast<long long>(result.table.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    result.table[static_cast<std::size_t>(i)] =
        evaluate_cell(grid, runner, static_cast<std::size_t>(i));
  }
  pick_best(result);
  return result;
}

namespace serial {

GridResult grid_search(const GridSpec& grid, const GridRunner& runner) {
  grid.validate();
  GridResult result;
  for (std::size_t i = 0; i < grid.size(); ++i) result.table.push_back(evaluate_cell(grid, runner, i));
  pick_best(result);
  return result;
}

}  // namespace serial

void write_grid_table(std::ostream& out, const GridSpec& grid, const GridResult& result) {
  for (const auto& a : grid.axes) out << a.name << ',';
  out << "mota,fp,fn,idsw,status\n";
  for (const auto& cell : result.table) {
    for (double v : cell.values) out << fmt::format("{}", v) << ',';
    if (cell.ok) {
      out << fmt::format("{:.6f}", cell.result.mota) << ',' << cell.result.fp << ','
          << cell.result.fn << ',' << cell.result.idsw << ",ok\n";
    } else {
      std::string reason = cell.error;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      out << ",,,,failed: " << reason << '\n';
    }
  }
}

}  // namespace bruv
