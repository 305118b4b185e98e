#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bruv/analysis.hpp"
#include "bruv/core.hpp"

namespace bruv {

// ---- MaxN accuracy ----------------------------------------------------------

struct SpeciesMaxN {
  std::string species;
  int predicted = 0;
  int truth = 0;
};

struct MaxNComparison {
  std::string video_id;
  std::vector<SpeciesMaxN> species;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1) standard deviation; 0 for fewer than two values
};

MeanSd mean_and_sample_sd(std::span<const double> values);

struct MaxNAccuracy {
  std::vector<std::pair<std::string, double>> per_video;
  MeanSd aggregate;
  std::vector<std::string> warnings;
};

/// Per video, the fraction of species whose predicted MaxN equals the truth.
/// Videos with no species are skipped with a warning.
MaxNAccuracy maxn_accuracy(const std::vector<MaxNComparison>& videos);

struct TruthMaxNRow {
  std::string video_id;
  std::string species;
  int maxn = 0;
};

inline constexpr const char* kTruthMaxNHeader = "video_id,species,maxn";
std::vector<TruthMaxNRow> read_truth_maxn(std::istream& in);

/// Pairs predicted and true MaxN over the union of species seen on either
/// side, per video over the union of videos. A species missing on one side
/// counts as 0 there.
std::vector<MaxNComparison> compare_maxn(const MaxNReport& predicted,
                                         const std::vector<TruthMaxNRow>& truth);

// ---- precision / recall / F1 -----------------------------------------------

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators: precision 0; recall 1 if there were no false positives
/// either, else 0; F1 0.
PrecisionRecall precision_recall_f1(std::int64_t tp, std::int64_t fp, std::int64_t fn);

// ---- detection AP -----------------------------------------------------------

struct TruthBox {
  BBox box;
  std::string cls;
};

struct PredictedBox {
  BBox box;
  double confidence = 0.0;
  std::string cls;
};

struct DetectionFrame {
  std::vector<TruthBox> truth;
  std::vector<PredictedBox> predictions;
};

struct DetectionEvalSet {
  std::vector<DetectionFrame> frames;
  double iou_threshold = 0.5;
};

struct ApResult {
  std::map<std::string, double> per_class;
  double mean = 0.0;  // over classes with at least one ground-truth box
  std::vector<std::string> warnings;
};

/// Area under the precision envelope for ranked hits (true = TP).
double average_precision(const std::vector<bool>& ranked_hits, std::size_t truth_count);

/// Greedy confidence-ordered matching per class, all-points interpolated AP.
ApResult map50(const DetectionEvalSet& eval);

/// Precision, recall and F1 over all classes for predictions at or above
/// `min_confidence`, using the same greedy matching as map50.
PrecisionRecall detection_prf(const DetectionEvalSet& eval, double min_confidence);

inline constexpr const char* kDetTruthHeader = "video_id,frame_index,x1,y1,x2,y2,class";
inline constexpr const char* kDetPredictionHeader =
    "video_id,frame_index,x1,y1,x2,y2,confidence,class";

/// Ground-truth and predicted boxes from delimited files, grouped into one
/// evaluation frame per distinct (video_id, frame_index) on either side.
DetectionEvalSet read_detection_eval(std::istream& truth, std::istream& predictions,
                                     double iou_threshold = 0.5);

// ---- CLEAR-MOT --------------------------------------------------------------

struct MotBox {
  std::int64_t id = 0;
  BBox box;
};

struct MotFrame {
  std::vector<MotBox> truth;
  std::vector<MotBox> predictions;
};

struct MOTEvalSet {
  std::vector<MotFrame> frames;
  double iou_threshold = 0.5;
};

struct MotaResult {
  double mota = 0.0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t idsw = 0;
  std::int64_t gt_count = 0;
  std::int64_t matches = 0;

  MotaResult& operator+=(const MotaResult& o);
};

/// Correspondences from the previous frame are kept while they still overlap
/// enough; the remainder is a maximum matching of minimum total (1 - IoU).
/// Throws Error when there is no ground truth.
MotaResult mota(const MOTEvalSet& eval);

/// Sums counts over sequences and recomputes MOTA.
MotaResult combine_mota(const std::vector<MotaResult>& parts);

inline constexpr const char* kTruthMotHeader = "video_id,frame_index,gt_id,x1,y1,x2,y2";

struct TruthMotRow {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::int64_t gt_id = 0;
  BBox box;
};

std::vector<TruthMotRow> read_truth_mot(std::istream& in);
void write_truth_mot(std::ostream& out, const std::vector<TruthMotRow>& rows);

/// Frames 0..frame_count-1 of one video from ground-truth rows and tracks.
MOTEvalSet build_mot_eval(const std::vector<TruthMotRow>& truth, const std::vector<Track>& tracks,
                          const std::string& video_id, std::int64_t frame_count,
                          double iou_threshold = 0.5);

// ---- grid search ------------------------------------------------------------

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct GridSpec {
  std::vector<GridAxis> axes;

  void validate() const;
  std::size_t size() const;
  /// Parameter values of cell `index`; the last axis varies fastest.
  std::vector<double> cell(std::size_t index) const;
};

struct GridCell {
  std::vector<double> values;
  bool ok = false;
  MotaResult result;
  std::string error;
};

struct GridResult {
  std::vector<GridCell> table;  // in cell order
  std::optional<std::size_t> best;
};

/// Evaluates one parameter combination. Must be safe to call concurrently.
using GridRunner = std::function<MotaResult(const std::vector<double>& values)>;

/// True when `a` should be preferred: higher MOTA, then fewer identity
/// switches, then lexicographically smaller parameters.
bool better_cell(const GridCell& a, const GridCell& b);

/// Evaluates every cell in parallel. A throwing runner marks its cell failed.
GridResult grid_search(const GridSpec& grid, const GridRunner& runner);

void write_grid_table(std::ostream& out, const GridSpec& grid, const GridResult& result);

namespace serial {

GridResult grid_search(const GridSpec& grid, const GridRunner& runner);

}  // namespace serial

}  // namespace bruv
