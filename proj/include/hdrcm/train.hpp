#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdrcm/checkpoint.hpp"
#include "hdrcm/config.hpp"
#include "hdrcm/metrics.hpp"

namespace hdrcm {

struct TrainResult {
    std::string checkpoint_path;
    std::string log_path;
    double final_stage1_loss = 0.0;
    double final_stage2_loss = 0.0;
};

// Two-stage training: stage 1 minimizes the consistency-training loss on
// the exposure-aware trajectories; stage 2 finetunes at a reduced rate
// with lambda_elc * L_ELC + lambda_ct * L_CT. AdamW, cosine annealing,
// global gradient-norm clipping. Deterministic given the config. Writes
// checkpoint.bin, trainlog.txt and resolved.cfg under out_dir. A
// non-finite loss aborts with the last good snapshot saved.
TrainResult train_run(const RunConfig& cfg, const std::string& out_dir);

// Resumes a stage-1 checkpoint and runs only the finetuning stage. Batch
// sampling matches the stage-2 half of train_run exactly, so loss-variant
// ablations can share one stage-1 run.
TrainResult resume_stage2(const RunConfig& cfg, const std::string& stage1_checkpoint,
                          const std::string& out_dir);

// One-step reconstruction of a single LDR image with a trained model
// (EMA weights). Returns the normalized linear HDR prediction. Exactly
// one network forward evaluation; `forward_evals` reports the counter
// delta when non-null. Dimensions not divisible by 8 are reflect-padded
// and cropped back.
class OneStepModel {
public:
    explicit OneStepModel(const std::string& checkpoint_path);
    ~OneStepModel();
    OneStepModel(const OneStepModel&) = delete;
    OneStepModel& operator=(const OneStepModel&) = delete;

    ImageF reconstruct(const ImageF& ldr, std::uint64_t seed,
                       std::uint64_t* forward_evals = nullptr) const;
    const RunConfig& config() const;

private:
    struct Impl;
    Impl* impl_;
};

// infer CLI path: read LDR (.ppm or .pfm), reconstruct, scale, write .hdr.
void infer_file(const std::string& checkpoint_path, const std::string& ldr_path,
                const std::string& out_path, std::uint64_t seed, double scale);

struct EvalSummary {
    std::vector<MetricReport> per_image;
    MetricReport mean;
    MetricReport identity_baseline;  // sRGB-linearized LDR treated as HDR
};

// Reconstructs every held-out pair of the config's synthetic eval split
// and scores it against ground truth.
EvalSummary evaluate_model(const OneStepModel& model, const RunConfig& cfg,
                           std::uint64_t infer_seed = 7);

MetricReport mean_report(const std::vector<MetricReport>& reports);

// Trajectory-mode x loss-variant ablation grid with shared seeds.
// Variants: {baseline, two_mask, three_mask} x {no_elc, uniform_lab,
// full_elc}; stage 1 is shared between the loss variants of a mode.
struct AblationRow {
    std::string mode, elc_variant;
    std::uint64_t seed = 0;
    MetricReport metrics;
};
std::vector<AblationRow> ablate(const RunConfig& base_cfg, const std::string& out_dir,
                                const std::vector<std::uint64_t>& seeds);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace hdrcm
