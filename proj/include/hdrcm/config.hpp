#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdrcm/datagen.hpp"
#include "hdrcm/expomask.hpp"
#include "hdrcm/losses.hpp"
#include "hdrcm/net.hpp"
#include "hdrcm/trajectory.hpp"

namespace hdrcm {

// Full experiment configuration. A run is a pure function of this struct;
// it serializes to and from a plain-text file of `section.key = value`
// lines (# starts a comment). Unknown keys are rejected. Every run writes
// its resolved configuration beside its outputs.
struct RunConfig {
    // data
    int data_scene_size = 128;
    int data_train_scenes = 48;
    int data_eval_scenes = 12;
    int data_eval_size = 96;
    std::uint64_t data_seed = 1234;
    double data_exp_min = 0.125, data_exp_max = 8.0;
    double data_sigma_read = 0.01, data_sigma_shot = 0.02;
    double data_light_min = 2.0, data_light_max = 500.0;

    MaskConfig mask;
    Schedule schedule;

    int model_base_channels = 32;
    int model_blocks_per_stage = 2;
    int model_time_embed_dim = 128;
    double model_data_scale = 0.5;

    ElcConfig elc;

    // AdamW with cosine annealing; stage 2 runs at a reduced rate.
    double optim_lr = 5e-5;
    double optim_lr_min = 1e-7;
    double optim_beta1 = 0.9;
    double optim_beta2 = 0.999;
    double optim_eps = 1e-8;
    double optim_weight_decay = 0.0;
    double optim_clip_norm = 1.0;
    double optim_stage2_lr_scale = 0.1;

    std::string train_mode = "three_mask";  // baseline | two_mask | three_mask
    int train_stage1_iters = 10000;
    int train_stage2_iters = 3000;
    int train_batch_size = 4;
    int train_crop = 64;
    std::uint64_t train_seed = 42;
    double train_lambda_ct_stage2 = 0.1;
    double train_lambda_elc = 1.0;
    double train_ema_decay = 0.999;
    int train_log_every = 50;

    double eval_mu = 5000.0;
    double eval_peak_nits = 100.0;

    std::string infer_terminal = "blended";  // blended | pure_noise

    SceneConfig scene_config(int size) const;
    LdrSimConfig ldr_config() const;
    NetConfig net_config() const;
    TrajectoryMode trajectory_mode() const;
    void validate() const;
};

// Parses `section.key = value` lines; throws on unknown keys or bad values.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
// Applies one `section.key=value` override (the CLI --set form).
void apply_override(RunConfig& cfg, const std::string& assignment);
// Canonical serialization; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& cfg);
// FNV-1a hash of the canonical serialization, as hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace hdrcm
