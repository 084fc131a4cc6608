#include "fgln/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

namespace fgln {

std::optional<double> pixel_auc(const std::vector<double>& pred, const std::vector<double>& gt) {
    if (pred.size() != gt.size())
        throw DimError("pixel_auc size mismatch: " + std::to_string(pred.size()) + " vs " +
                       std::to_string(gt.size()));
    const size_t n = pred.size();
    std::int64_t pos = 0;
    for (double g : gt) pos += g > 0.5 ? 1 : 0;
    std::int64_t neg = static_cast<std::int64_t>(n) - pos;
    if (pos == 0 || neg == 0) return std::nullopt;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return pred[a] < pred[b]; });

    // Midranks over tied score groups; sum ranks of positives.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && pred[order[j]] == pred[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k)
            if (gt[order[k]] > 0.5) rank_sum_pos += midrank;
        i = j;
    }
    double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

namespace {

struct Counts {
    std::int64_t tp = 0, fp = 0, fn = 0;
};

Counts count(const std::vector<double>& pred, const std::vector<double>& gt, double threshold) {
    if (pred.size() != gt.size()) throw DimError("mask size mismatch");
    Counts c;
    for (size_t i = 0; i < pred.size(); ++i) {
        bool p = pred[i] >= threshold, g = gt[i] > 0.5;
        c.tp += p && g;
        c.fp += p && !g;
        c.fn += !p && g;
    }
    return c;
}

}  // namespace

double f1_score(const std::vector<double>& pred, const std::vector<double>& gt, double threshold) {
    Counts c = count(pred, gt, threshold);
    std::int64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;  // both masks empty
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double iou(const std::vector<double>& pred, const std::vector<double>& gt, double threshold) {
    Counts c = count(pred, gt, threshold);
    std::int64_t uni = c.tp + c.fp + c.fn;
    if (uni == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(uni);
}

Aggregate aggregate_scores(const std::vector<ImageScore>& scores) {
    Aggregate a;
    double auc_sum = 0.0;
    int auc_n = 0;
    for (const auto& s : scores) {
        a.f1 += s.f1;
        a.iou += s.iou;
        ++a.count;
        if (s.auc) {
            auc_sum += *s.auc;
            ++auc_n;
        } else {
            ++a.auc_excluded;
        }
    }
    if (a.count > 0) {
        a.f1 /= a.count;
        a.iou /= a.count;
    }
    a.auc = auc_n > 0 ? auc_sum / auc_n : 0.0;
    return a;
}

MetricsReport summarize(std::vector<ImageScore> scores) {
    MetricsReport r;
    r.overall = aggregate_scores(scores);
    const double caps[3] = {0.01, 0.05, 0.10};
    for (int b = 0; b < 3; ++b) {
        std::vector<ImageScore> in_bucket;
        for (const auto& s : scores)
            if (s.gt_area_fraction > 0.0 && s.gt_area_fraction < caps[b]) in_bucket.push_back(s);
        r.buckets[static_cast<size_t>(b)] = aggregate_scores(in_bucket);
    }
    r.per_image = std::move(scores);
    return r;
}

void write_report(const MetricsReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };

    std::ofstream per(fs::path(dir) / "report.tsv", std::ios::binary);
    if (!per) throw ContractError("cannot write report.tsv in " + dir);
    per << "idx\tdistortion\tauc\tf1\tiou\tgt_area_fraction\n";
    for (const auto& s : report.per_image)
        per << s.idx << '\t' << s.distortion << '\t' << (s.auc ? fmt(*s.auc) : "excluded") << '\t'
            << fmt(s.f1) << '\t' << fmt(s.iou) << '\t' << fmt(s.gt_area_fraction) << '\n';

    std::ofstream sum(fs::path(dir) / "summary.tsv", std::ios::binary);
    if (!sum) throw ContractError("cannot write summary.tsv in " + dir);
    sum << "row\tauc\tf1\tiou\tcount\tauc_excluded\n";
    auto emit = [&](const std::string& name, const Aggregate& a) {
        sum << name << '\t' << fmt(a.auc) << '\t' << fmt(a.f1) << '\t' << fmt(a.iou) << '\t'
            << a.count << '\t' << a.auc_excluded << '\n';
    };
    emit("overall", report.overall);
    emit("bucket<1%", report.buckets[0]);
    emit("bucket<5%", report.buckets[1]);
    emit("bucket<10%", report.buckets[2]);
    // One row per distortion tag, in first-seen order.
    std::vector<std::string> tags;
    std::map<std::string, std::vector<ImageScore>> by_tag;
    for (const auto& s : report.per_image) {
        if (!by_tag.count(s.distortion)) tags.push_back(s.distortion);
        by_tag[s.distortion].push_back(s);
    }
    if (tags.size() > 1)
        for (const auto& t : tags) emit("distortion:" + t, aggregate_scores(by_tag[t]));
}

}  // namespace fgln
