#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fgln/tensor.hpp"

namespace fgln {

// Pixel-level scores for one image. auc is empty when the ground truth is
// single-class (the image is excluded from AUC aggregation).
struct ImageScore {
    int idx = 0;
    std::optional<double> auc;
    double f1 = 0.0;
    double iou = 0.0;
    double gt_area_fraction = 0.0;
    std::string distortion = "none";
};

struct Aggregate {
    double auc = 0.0, f1 = 0.0, iou = 0.0;
    int count = 0;          // images in the F1/IoU means
    int auc_excluded = 0;   // single-class images left out of the AUC mean
};

struct MetricsReport {
    std::vector<ImageScore> per_image;
    Aggregate overall;
    // Small-region buckets: area fraction < 1%, < 5%, < 10%.
    std::array<Aggregate, 3> buckets;
};

// Tie-corrected Mann-Whitney rank statistic over flattened pixels; nullopt
// when gt has only one class.
std::optional<double> pixel_auc(const std::vector<double>& pred, const std::vector<double>& gt);

double f1_score(const std::vector<double>& pred, const std::vector<double>& gt,
                double threshold = 0.5);
double iou(const std::vector<double>& pred, const std::vector<double>& gt,
           double threshold = 0.5);

// Mean of per-image scores; AUC averaged over the non-excluded subset.
Aggregate aggregate_scores(const std::vector<ImageScore>& scores);

// Overall aggregate plus the area-fraction buckets.
MetricsReport summarize(std::vector<ImageScore> scores);

// report.tsv (one row per image) and summary.tsv (overall + buckets, one row
// per distortion tag present in the scores).
void write_report(const MetricsReport& report, const std::string& dir);

}  // namespace fgln
