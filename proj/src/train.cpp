#include "hdrcm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hdrcm/colorspace.hpp"
#include "hdrcm/hdrio.hpp"
#include "hdrcm/losses.hpp"

namespace hdrcm {

namespace {

using NetF = ConsistencyNet<float>;

std::vector<TrainPair> build_split(const RunConfig& cfg, int count, int size,
                                   std::uint64_t lane_base) {
    SeededRng root(cfg.data_seed);
    std::vector<TrainPair> pairs;
    pairs.reserve(count);
    const SceneConfig sc = cfg.scene_config(size);
    const LdrSimConfig lc = cfg.ldr_config();
    for (int i = 0; i < count; ++i) {
        SeededRng rng = root.fork(lane_base + static_cast<std::uint64_t>(i));
        pairs.push_back(make_pair(sc, lc, rng, cfg.eval_mu));
    }
    return pairs;
}

struct AdamW {
    double beta1, beta2, eps, weight_decay;
    std::vector<std::vector<float>> m, v;
    std::int64_t step = 0;

    void init(NetF& net, const RunConfig& cfg) {
        beta1 = cfg.optim_beta1;
        beta2 = cfg.optim_beta2;
        eps = cfg.optim_eps;
        weight_decay = cfg.optim_weight_decay;
        auto ps = net.params();
        m.resize(ps.size());
        v.resize(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) {
            m[i].assign(ps[i].value->size(), 0.f);
            v[i].assign(ps[i].value->size(), 0.f);
        }
    }

    void update(NetF& net, double lr, double clip_norm) {
        auto ps = net.params();
        double norm2 = 0.0;
        for (auto& p : ps)
            for (float g : *p.grad) norm2 += static_cast<double>(g) * g;
        const double norm = std::sqrt(norm2);
        const double scale = clip_norm > 0.0 && norm > clip_norm ? clip_norm / norm : 1.0;

        ++step;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < ps.size(); ++i) {
            auto& w = *ps[i].value;
            auto& g = *ps[i].grad;
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double gj = g[j] * scale;
                m[i][j] = static_cast<float>(beta1 * m[i][j] + (1.0 - beta1) * gj);
                v[i][j] = static_cast<float>(beta2 * v[i][j] + (1.0 - beta2) * gj * gj);
                const double mhat = m[i][j] / bc1;
                const double vhat = v[i][j] / bc2;
                w[j] = static_cast<float>(
                    w[j] - lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w[j]));
            }
        }
    }
};

double cosine_lr(double lr0, double lr_min, int iter, int total) {
    if (total <= 1) return lr0;
    const double t = static_cast<double>(iter) / static_cast<double>(total - 1);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

TrainBatch assemble_batch(const std::vector<TrainPair>& pairs, const RunConfig& cfg,
                          SeededRng& rng) {
    TrainBatch batch;
    batch.samples.resize(cfg.train_batch_size);
    const int crop = cfg.train_crop;
    for (auto& s : batch.samples) {
        const auto& p = pairs[static_cast<std::size_t>(rng.next_double() * pairs.size()) %
                              pairs.size()];
        const int oy = static_cast<int>(rng.next_double() * (p.y0.height() - crop + 1));
        const int ox = static_cast<int>(rng.next_double() * (p.y0.width() - crop + 1));
        s.x0 = p.x0_working.crop(oy, ox, crop, crop);
        s.y0 = p.y0.crop(oy, ox, crop, crop);
        s.masks = compute_masks(s.y0, cfg.mask);  // per-crop statistics
        s.eps = sample_normal(rng, crop, crop, 3);
        s.t_index = static_cast<int>(rng.next_double() * cfg.schedule.steps) %
                    cfg.schedule.steps;
    }
    return batch;
}

Checkpoint make_checkpoint(NetF& net, EmaState<float>& ema, AdamW& opt,
                           const RunConfig& cfg, int stage, int iter) {
    Checkpoint ck;
    const std::string cfg_text = serialize_config(cfg);
    std::istringstream in(cfg_text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos)
            ck.config.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    ck.config.emplace_back("run.config_hash", config_hash(cfg));
    ck.config.emplace_back("run.stage", std::to_string(stage));
    ck.config.emplace_back("run.iteration", std::to_string(iter));
    ck.config.emplace_back("run.opt_step", std::to_string(opt.step));

    auto push_params = [&ck](NetF& n, const std::string& prefix) {
        for (auto& p : n.params()) {
            CheckpointTensor t;
            t.name = prefix + p.name;
            for (int d : p.shape) t.dims.push_back(static_cast<std::uint32_t>(d));
            t.data.assign(p.value->begin(), p.value->end());
            ck.tensors.push_back(std::move(t));
        }
    };
    push_params(net, "net.");
    push_params(ema.shadow, "ema.");
    auto ps = net.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CheckpointTensor tm{"opt.m." + ps[i].name,
                            {static_cast<std::uint32_t>(opt.m[i].size())},
                            opt.m[i]};
        CheckpointTensor tv{"opt.v." + ps[i].name,
                            {static_cast<std::uint32_t>(opt.v[i].size())},
                            opt.v[i]};
        ck.tensors.push_back(std::move(tm));
        ck.tensors.push_back(std::move(tv));
    }
    return ck;
}

void load_net_params(NetF& net, const Checkpoint& ck, const std::string& prefix) {
    for (auto& p : net.params()) {
        const CheckpointTensor* t = ck.find(prefix + p.name);
        if (t == nullptr)
            throw std::runtime_error("checkpoint: missing tensor " + prefix + p.name);
        if (t->data.size() != p.value->size())
            throw std::runtime_error("checkpoint: size mismatch for " + t->name);
        std::copy(t->data.begin(), t->data.end(), p.value->begin());
    }
}

}  // namespace

namespace {

struct TrainerState {
    NetF net;
    EmaState<float> ema;
    AdamW opt;
};

// One optimization stage. Stage s draws its batches from fork(s) of the
// training seed, so a resumed stage 2 sees the same batches as train_run.
double run_stage(TrainerState& st, const RunConfig& cfg,
                 const std::vector<TrainPair>& pairs, int stage, int iters, double lr0,
                 double lambda_ct, const ElcConfig* elc, double lambda_elc,
                 std::ofstream& log, const std::string& ck_path, Checkpoint& last_good) {
    SeededRng stage_rng = SeededRng(cfg.train_seed).fork(static_cast<std::uint64_t>(stage));
    const TrajectoryMode mode = cfg.trajectory_mode();
    double last = 0.0;
    for (int it = 0; it < iters; ++it) {
        TrainBatch batch = assemble_batch(pairs, cfg, stage_rng);
        st.net.zero_grads();
        StepLosses losses;
        try {
            losses = training_step(st.net, st.ema.shadow, batch, cfg.schedule, mode,
                                   lambda_ct, elc, lambda_elc, cfg.eval_mu);
        } catch (const std::runtime_error& e) {
            save_checkpoint(ck_path, last_good);
            log << "# aborted at stage " << stage << " iter " << it << ": " << e.what()
                << "\n";
            throw;
        }
        const double lr = cosine_lr(lr0, cfg.optim_lr_min, it, iters);
        st.opt.update(st.net, lr, cfg.optim_clip_norm);
        st.ema.update(st.net);
        last = losses.total;
        if (it % cfg.train_log_every == 0 || it + 1 == iters)
            log << it << " " << stage << " " << losses.total << " " << lr << "\n";
        if (it % 250 == 249)
            last_good = make_checkpoint(st.net, st.ema, st.opt, cfg, stage, it);
    }
    return last;
}

void write_run_prologue(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream rc(out_dir + "/resolved.cfg");
    rc << serialize_config(cfg);
}

}  // namespace

TrainResult train_run(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    write_run_prologue(cfg, out_dir);
    const std::string log_path = out_dir + "/trainlog.txt";
    const std::string ck_path = out_dir + "/checkpoint.bin";
    std::ofstream log(log_path);
    log << "# iter stage loss lr\n";

    const std::vector<TrainPair> pairs =
        build_split(cfg, cfg.data_train_scenes, cfg.data_scene_size, 0);

    TrainerState st;
    st.net.build(cfg.net_config());
    SeededRng init_rng(cfg.train_seed);
    init_params(st.net, init_rng);
    st.ema.init(st.net, cfg.train_ema_decay);
    st.opt.init(st.net, cfg);

    const auto t_start = std::chrono::steady_clock::now();
    TrainResult result{ck_path, log_path, 0.0, 0.0};
    Checkpoint last_good = make_checkpoint(st.net, st.ema, st.opt, cfg, 0, 0);

    result.final_stage1_loss = run_stage(st, cfg, pairs, 1, cfg.train_stage1_iters,
                                         cfg.optim_lr, 1.0, nullptr, 0.0, log, ck_path,
                                         last_good);
    result.final_stage2_loss =
        run_stage(st, cfg, pairs, 2, cfg.train_stage2_iters,
                  cfg.optim_lr * cfg.optim_stage2_lr_scale, cfg.train_lambda_ct_stage2,
                  &cfg.elc, cfg.train_lambda_elc, log, ck_path, last_good);

    save_checkpoint(ck_path, make_checkpoint(st.net, st.ema, st.opt, cfg, 2,
                                             cfg.train_stage2_iters));
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start);
    log << "# wall_clock_seconds " << dt.count() << "\n";
    return result;
}

TrainResult resume_stage2(const RunConfig& cfg, const std::string& stage1_checkpoint,
                          const std::string& out_dir) {
    cfg.validate();
    write_run_prologue(cfg, out_dir);
    const std::string log_path = out_dir + "/trainlog.txt";
    const std::string ck_path = out_dir + "/checkpoint.bin";
    std::ofstream log(log_path);
    log << "# iter stage loss lr\n";

    const std::vector<TrainPair> pairs =
        build_split(cfg, cfg.data_train_scenes, cfg.data_scene_size, 0);

    const Checkpoint ck1 = load_checkpoint(stage1_checkpoint);
    TrainerState st;
    st.net.build(cfg.net_config());
    load_net_params(st.net, ck1, "net.");
    st.ema.init(st.net, cfg.train_ema_decay);
    load_net_params(st.ema.shadow, ck1, "ema.");
    st.opt.init(st.net, cfg);
    {
        auto ps = st.net.params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const CheckpointTensor* m = ck1.find("opt.m." + ps[i].name);
            const CheckpointTensor* v = ck1.find("opt.v." + ps[i].name);
            if (m == nullptr || v == nullptr)
                throw std::runtime_error("resume_stage2: optimizer state missing");
            st.opt.m[i].assign(m->data.begin(), m->data.end());
            st.opt.v[i].assign(v->data.begin(), v->data.end());
        }
        if (const std::string* s = ck1.config_value("run.opt_step"))
            st.opt.step = std::stoll(*s);
    }

    TrainResult result{ck_path, log_path, 0.0, 0.0};
    Checkpoint last_good = make_checkpoint(st.net, st.ema, st.opt, cfg, 1, 0);
    result.final_stage2_loss =
        run_stage(st, cfg, pairs, 2, cfg.train_stage2_iters,
                  cfg.optim_lr * cfg.optim_stage2_lr_scale, cfg.train_lambda_ct_stage2,
                  &cfg.elc, cfg.train_lambda_elc, log, ck_path, last_good);
    save_checkpoint(ck_path, make_checkpoint(st.net, st.ema, st.opt, cfg, 2,
                                             cfg.train_stage2_iters));
    return result;
}

struct OneStepModel::Impl {
    RunConfig cfg;
    mutable NetF ema_net;  // inference uses the EMA weights
};

OneStepModel::OneStepModel(const std::string& checkpoint_path) : impl_(new Impl) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    std::ostringstream cfg_text;
    for (const auto& kv : ck.config)
        if (kv.first.rfind("run.", 0) != 0) cfg_text << kv.first << " = " << kv.second << "\n";
    impl_->cfg = parse_config_text(cfg_text.str());
    impl_->ema_net.build(impl_->cfg.net_config());
    load_net_params(impl_->ema_net, ck, "ema.");
}

OneStepModel::~OneStepModel() { delete impl_; }

const RunConfig& OneStepModel::config() const { return impl_->cfg; }

namespace {

ImageF reflect_pad_to_multiple(const ImageF& img, int mult, int& pad_y, int& pad_x) {
    pad_y = (mult - img.height() % mult) % mult;
    pad_x = (mult - img.width() % mult) % mult;
    if (pad_y == 0 && pad_x == 0) return img;
    ImageF out(img.height() + pad_y, img.width() + pad_x, img.channels());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            int sy = y < img.height() ? y : 2 * img.height() - 2 - y;
            int sx = x < img.width() ? x : 2 * img.width() - 2 - x;
            for (int c = 0; c < img.channels(); ++c)
                out.at(y, x, c) = img.at(sy, sx, c);
        }
    return out;
}

}  // namespace

ImageF OneStepModel::reconstruct(const ImageF& ldr, std::uint64_t seed,
                                 std::uint64_t* forward_evals) const {
    const RunConfig& cfg = impl_->cfg;
    if (ldr.channels() != 3)
        throw std::invalid_argument("reconstruct: expected a 3-channel LDR image");

    // Masks come from the original image statistics; padding only feeds
    // the network's dyadic requirement.
    ExposureMasks masks = compute_masks(ldr, cfg.mask);
    int pad_y = 0, pad_x = 0;
    const ImageF y0p = reflect_pad_to_multiple(ldr, 8, pad_y, pad_x);
    ExposureMasks masks_p;
    {
        int py = 0, px = 0;
        masks_p.w_over = reflect_pad_to_multiple(masks.w_over, 8, py, px);
        masks_p.w_under = reflect_pad_to_multiple(masks.w_under, 8, py, px);
        masks_p.w_good = reflect_pad_to_multiple(masks.w_good, 8, py, px);
        masks_p.degenerate = masks.degenerate;
    }
    SeededRng rng(seed);
    ImageF eps = sample_normal(rng, y0p.height(), y0p.width(), 3);

    const TrajectoryMode mode = cfg.trajectory_mode();
    ImageF x_T;
    if (cfg.infer_terminal == "pure_noise") {
        x_T = ImageF(y0p.height(), y0p.width(), 3);
        for (std::size_t i = 0; i < x_T.size(); ++i)
            x_T.data()[i] = cfg.schedule.sigma_o(cfg.schedule.final_t) * eps.data()[i];
    } else {
        x_T = terminal_state(y0p, masks_p, eps, cfg.schedule, mode);
    }

    Tensor<float> xt = detail::image_to_tensor_sample<float>(x_T);
    Tensor<float> y0t = detail::image_to_tensor_sample<float>(y0p);
    const std::uint64_t before = impl_->ema_net.forward_evals;
    Tensor<float> out = consistency_out(impl_->ema_net, xt,
                                        {cfg.schedule.final_t}, y0t, /*keep=*/false);
    if (forward_evals != nullptr) *forward_evals = impl_->ema_net.forward_evals - before;

    ImageF working = detail::tensor_sample_to_image(out, 0);
    ImageF pred(ldr.height(), ldr.width(), 3);
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x)
            for (int c = 0; c < 3; ++c)
                pred.at(y, x, c) =
                    mu_law_inv_scalar(std::clamp(working.at(y, x, c), 0.0, 1.0), cfg.eval_mu);
    return pred;
}

void infer_file(const std::string& checkpoint_path, const std::string& ldr_path,
                const std::string& out_path, std::uint64_t seed, double scale) {
    const OneStepModel model(checkpoint_path);
    ImageF ldr;
    if (ldr_path.size() > 4 && ldr_path.substr(ldr_path.size() - 4) == ".pfm")
        ldr = read_pfm(ldr_path);
    else
        ldr = read_ppm(ldr_path);
    std::uint64_t evals = 0;
    ImageF pred = model.reconstruct(ldr, seed, &evals);
    if (evals != 1) throw std::runtime_error("infer: expected exactly one forward evaluation");
    if (scale != 1.0)
        for (double& v : pred.values()) v *= scale;
    write_hdr(out_path, pred);
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
    MetricReport m;
    for (const auto& r : reports) {
        m.psnr_l += r.psnr_l;
        m.psnr_mu += r.psnr_mu;
        m.psnr_pu += r.psnr_pu;
        m.ssim_mu += r.ssim_mu;
        m.msssim_mu += r.msssim_mu;
        m.delta_e2000 += r.delta_e2000;
    }
    const double n = reports.empty() ? 1.0 : static_cast<double>(reports.size());
    m.psnr_l /= n;
    m.psnr_mu /= n;
    m.psnr_pu /= n;
    m.ssim_mu /= n;
    m.msssim_mu /= n;
    m.delta_e2000 /= n;
    return m;
}

EvalSummary evaluate_model(const OneStepModel& model, const RunConfig& cfg,
                           std::uint64_t infer_seed) {
    const std::vector<TrainPair> pairs =
        build_split(cfg, cfg.data_eval_scenes, cfg.data_eval_size, 1000000);
    EvalSummary summary;
    std::vector<MetricReport> baseline;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const ImageF pred =
            model.reconstruct(pairs[i].y0, infer_seed + i, nullptr);
        summary.per_image.push_back(
            evaluate_pair(pred, pairs[i].hdr_norm, cfg.eval_mu, cfg.eval_peak_nits));
        baseline.push_back(evaluate_pair(srgb_decode(pairs[i].y0), pairs[i].hdr_norm,
                                         cfg.eval_mu, cfg.eval_peak_nits));
    }
    summary.mean = mean_report(summary.per_image);
    summary.identity_baseline = mean_report(baseline);
    return summary;
}

std::vector<AblationRow> ablate(const RunConfig& base_cfg, const std::string& out_dir,
                                const std::vector<std::uint64_t>& seeds) {
    std::filesystem::create_directories(out_dir);
    std::vector<AblationRow> rows;
    const char* modes[] = {"baseline", "two_mask", "three_mask"};
    for (std::uint64_t seed : seeds) {
        for (const char* mode : modes) {
            // Stage 1 is shared across the loss variants of one mode.
            RunConfig stage1_cfg = base_cfg;
            stage1_cfg.train_mode = mode;
            stage1_cfg.train_seed = seed;
            stage1_cfg.train_stage2_iters = 0;
            const std::string dir1 = out_dir + "/" + mode + "_s" + std::to_string(seed);
            train_run(stage1_cfg, dir1 + "/stage1");

            struct Variant {
                const char* name;
                int stage2_iters;
                bool uniform;
            };
            const Variant variants[] = {
                {"no_elc", 0, false},
                {"uniform_lab", base_cfg.train_stage2_iters, true},
                {"full_elc", base_cfg.train_stage2_iters, false},
            };
            for (const Variant& v : variants) {
                std::string ck = dir1 + "/stage1/checkpoint.bin";
                RunConfig vcfg = stage1_cfg;
                if (v.stage2_iters > 0) {
                    vcfg.train_stage2_iters = v.stage2_iters;
                    vcfg.elc.uniform = v.uniform;
                    const std::string dir2 = dir1 + "/" + v.name;
                    resume_stage2(vcfg, dir1 + "/stage1/checkpoint.bin", dir2);
                    ck = dir2 + "/checkpoint.bin";
                }
                OneStepModel model(ck);
                EvalSummary s = evaluate_model(model, vcfg);
                rows.push_back({mode, v.name, seed, s.mean});
            }
        }
    }
    std::ofstream csv(out_dir + "/ablation.csv");
    csv << ablation_csv(rows);
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "mode,elc_variant,seed," << metric_csv_header() << "\n";
    for (const auto& r : rows)
        os << r.mode << "," << r.elc_variant << "," << r.seed << ","
           << metric_csv_row(r.mode + "/" + r.elc_variant, r.metrics) << "\n";
    return os.str();
}

}  // namespace hdrcm
