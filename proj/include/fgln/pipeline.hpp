#pragma once

#include <string>
#include <vector>

#include "fgln/adam.hpp"
#include "fgln/config.hpp"
#include "fgln/distort.hpp"
#include "fgln/gradcheck.hpp"
#include "fgln/metrics.hpp"
#include "fgln/model.hpp"

namespace fgln {

// In-memory dataset: per-sample 1x3xSxS rgb and guided-noise tensors plus
// the 1x1xSxS binary mask.
struct LoadedDataset {
    std::vector<Tensor> rgb;
    std::vector<Tensor> noise;
    std::vector<Tensor> gt;
    std::vector<ManifestRow> manifest;
    int size = 0;
};

LoadedDataset load_dataset(const std::string& dir, int guided_r, double guided_eps);

// Stacks the given sample indices along the batch axis.
Tensor stack_batch(const std::vector<Tensor>& items, const std::vector<int>& idx);

void cmd_gen_data(const RunConfig& cfg);

struct TrainResult {
    double final_loss = 0.0;
    int steps = 0;
    std::string checkpoint_path;
};

// Adam on the four-scale objective; lr halved every lr_halving_period
// epochs; per-step rows appended to <out_dir>/train.tsv; checkpoint per
// epoch. Aborts (ContractError) on non-finite loss, naming the first
// non-finite tensor in the graph.
TrainResult cmd_train(const RunConfig& cfg);

// Scores `split` with the checkpointed model; specs like "blur:15" add
// distorted evaluation rows alongside the undistorted pass. Writes
// report.tsv / summary.tsv under out_dir.
MetricsReport cmd_eval(const RunConfig& cfg, const std::vector<std::string>& distort_specs);

void cmd_localize(const RunConfig& cfg, const std::string& image_path,
                  const std::string& out_path);

void cmd_noise(const std::string& image_path, const std::string& out_path, int r, double eps);

void cmd_distort(const std::string& image_path, const std::string& out_path,
                 const std::string& spec, std::uint64_t seed);

// Finite-difference verification of the miniature end-to-end model; prints
// the worst offender per parameter group.
FiniteDiffReport cmd_gradcheck(std::uint64_t seed, double h = 3e-6, double tol = 1e-4);

// Runs one sample through the trained model and returns the final mask
// upsampled to the input resolution (values in (0,1)).
Tensor infer_mask(const ParamStore& params_const, const ModelConfig& cfg, const Tensor& rgb,
                  const Tensor& noise);

}  // namespace fgln
