#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hdrcm/colorspace.hpp"
#include "hdrcm/config.hpp"
#include "hdrcm/datagen.hpp"
#include "hdrcm/hdrio.hpp"
#include "hdrcm/losses.hpp"
#include "hdrcm/metrics.hpp"
#include "hdrcm/train.hpp"

namespace fs = std::filesystem;
using namespace hdrcm;

namespace {

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg = path.empty() ? RunConfig{} : parse_config_file(path);
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

void write_resolved(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir + "/resolved.cfg");
    f << serialize_config(cfg);
}

std::string index_name(const char* stem, int i, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%04d%s", stem, i, suffix);
    return buf;
}

ImageF read_ldr_any(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".pfm") return read_pfm(path);
    return read_ppm(path);
}

ImageF read_hdr_any(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".pfm") return read_pfm(path);
    return read_hdr(path);
}

std::vector<std::string> list_images(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string ext = e.path().extension().string();
        if (ext == ".pfm" || ext == ".hdr") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir, int count) {
    write_resolved(cfg, out_dir);
    std::ofstream manifest(out_dir + "/manifest.txt");
    manifest << "# index seed hdr ldr\n";
    SeededRng root(cfg.data_seed);
    for (int i = 0; i < count; ++i) {
        SeededRng rng = root.fork(static_cast<std::uint64_t>(i));
        const TrainPair pair =
            make_pair(cfg.scene_config(cfg.data_scene_size), cfg.ldr_config(), rng, cfg.eval_mu);
        const std::string hdr_name = index_name("scene_", i, ".pfm");
        const std::string ldr_name = index_name("scene_", i, "_ldr.ppm");
        write_pfm(out_dir + "/" + hdr_name, pair.hdr_norm);
        write_ppm(out_dir + "/" + ldr_name, pair.y0);
        manifest << i << " " << cfg.data_seed << ":" << i << " " << hdr_name << " "
                 << ldr_name << "\n";
    }
    std::cout << "wrote " << count << " pairs to " << out_dir << "\n";
    return 0;
}

int cmd_mask(const RunConfig& cfg, const std::string& input, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const ImageF ldr = read_ldr_any(input);
    const ExposureMasks m = compute_masks(ldr, cfg.mask);
    write_pfm(out_dir + "/w_over.pfm", m.w_over);
    write_pfm(out_dir + "/w_under.pfm", m.w_under);
    write_pfm(out_dir + "/w_good.pfm", m.w_good);
    // false-color composite: over -> red, good -> green, under -> blue
    ImageF comp(ldr.height(), ldr.width(), 3);
    for (int y = 0; y < ldr.height(); ++y)
        for (int x = 0; x < ldr.width(); ++x) {
            comp.at(y, x, 0) = m.w_over.at(y, x, 0);
            comp.at(y, x, 1) = m.w_good.at(y, x, 0);
            comp.at(y, x, 2) = m.w_under.at(y, x, 0);
        }
    write_ppm(out_dir + "/composite.ppm", comp);
    if (m.degenerate) std::cout << "note: degenerate luminance range, all well-exposed\n";
    std::cout << "masks written to " << out_dir << "\n";
    return 0;
}

int cmd_traj(const RunConfig& cfg, const std::string& hdr_path, const std::string& ldr_path,
             const std::vector<double>& times, std::uint64_t seed,
             const std::string& out_dir) {
    fs::create_directories(out_dir);
    const ImageF hdr = read_hdr_any(hdr_path);
    const double p99 = percentile(luminance(hdr).values(), 99.0);
    ImageF hdr_norm(hdr.height(), hdr.width(), 3);
    for (std::size_t i = 0; i < hdr.size(); ++i) hdr_norm.data()[i] = hdr.data()[i] / p99;
    const ImageF x0 = mu_law(hdr_norm, cfg.eval_mu);
    const ImageF y0 = read_ldr_any(ldr_path);
    const ExposureMasks masks = compute_masks(y0, cfg.mask);
    SeededRng rng(seed);
    const ImageF eps = sample_normal(rng, x0.height(), x0.width(), 3);
    for (double t : times) {
        const ImageF xt =
            sample_state(x0, y0, masks, t, eps, cfg.schedule, cfg.trajectory_mode());
        char buf[64];
        std::snprintf(buf, sizeof(buf), "x_t_%.4f.pfm", t);
        write_pfm(out_dir + "/" + buf, xt);
    }
    std::cout << times.size() << " states written to " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_csv, double mu, double peak_nits) {
    const auto preds = list_images(pred_dir);
    const auto gts = list_images(gt_dir);
    if (preds.size() != gts.size() || preds.empty()) {
        std::cerr << "eval: prediction and ground-truth sets differ in size ("
                  << preds.size() << " vs " << gts.size() << ")\n";
        return 1;
    }
    std::vector<MetricReport> reports;
    std::ofstream csv(out_csv);
    csv << metric_csv_header() << "\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const MetricReport r =
            evaluate_pair(read_hdr_any(preds[i]), read_hdr_any(gts[i]), mu, peak_nits);
        reports.push_back(r);
        csv << metric_csv_row(fs::path(preds[i]).filename().string(), r) << "\n";
    }
    const MetricReport m = mean_report(reports);
    csv << metric_csv_row("mean", m) << "\n";
    std::cout << "pairs: " << reports.size() << "\n"
              << "PSNR-l  " << m.psnr_l << " dB\n"
              << "PSNR-mu " << m.psnr_mu << " dB\n"
              << "PSNR-PU " << m.psnr_pu << " dB\n"
              << "SSIM-mu " << m.ssim_mu << "\n"
              << "MS-SSIM " << m.msssim_mu << "\n"
              << "dE2000  " << m.delta_e2000 << "\n"
              << "per-image CSV: " << out_csv << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exposure-aware one-step consistency HDR reconstruction"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", input, input_ldr, checkpoint, pred_dir, gt_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 7;
    double scale = 1.0;
    int count = 16;
    std::vector<double> times{0.25, 0.5, 1.0};
    std::vector<std::uint64_t> seeds{1, 2, 3};

    auto add_common = [&](CLI::App* sub, bool config_required) {
        sub->add_option("--config", config_path, "run configuration file")
            ->required(config_required);
        sub->add_option("--set", overrides, "override: section.key=value")->take_all();
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "write synthetic HDR/LDR pairs");
    add_common(gen, false);
    gen->add_option("--count", count, "number of pairs");

    CLI::App* mask = app.add_subcommand("mask", "compute exposure masks for an LDR image");
    add_common(mask, false);
    mask->add_option("--input", input, "LDR image (.ppm or .pfm)")->required();

    CLI::App* traj = app.add_subcommand("traj", "dump trajectory states x_t");
    add_common(traj, false);
    traj->add_option("--hdr", input, "HDR target (.pfm or .hdr)")->required();
    traj->add_option("--ldr", input_ldr, "LDR condition (.ppm or .pfm)")->required();
    traj->add_option("--times", times, "times in [eps_t, T]");
    traj->add_option("--seed", seed, "noise seed");

    CLI::App* train = app.add_subcommand("train", "two-stage training");
    add_common(train, true);

    CLI::App* infer = app.add_subcommand("infer", "one-step reconstruction of an LDR image");
    infer->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    infer->add_option("--input", input, "LDR image (.ppm or .pfm)")->required();
    infer->add_option("--out", out_dir, "output .hdr path")->required();
    infer->add_option("--seed", seed, "noise seed");
    infer->add_option("--scale", scale, "linear scale applied before writing");

    CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
    eval->add_option("--pred-dir", pred_dir, "directory of predicted .hdr/.pfm")->required();
    eval->add_option("--gt-dir", gt_dir, "directory of ground-truth .hdr/.pfm")->required();
    eval->add_option("--out", out_dir, "output CSV path");
    double mu = 5000.0, peak_nits = 100.0;
    eval->add_option("--mu", mu, "mu-law compression constant");
    eval->add_option("--peak-nits", peak_nits, "PU21 peak display luminance");

    CLI::App* abl = app.add_subcommand("ablate", "trajectory/loss ablation grid");
    add_common(abl, true);
    abl->add_option("--seeds", seeds, "training seeds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(load_config(config_path, overrides), out_dir, count);
        if (mask->parsed()) return cmd_mask(load_config(config_path, overrides), input, out_dir);
        if (traj->parsed())
            return cmd_traj(load_config(config_path, overrides), input, input_ldr, times, seed,
                            out_dir);
        if (train->parsed()) {
            const TrainResult r = train_run(load_config(config_path, overrides), out_dir);
            std::cout << "checkpoint: " << r.checkpoint_path << "\n"
                      << "final stage-1 loss: " << r.final_stage1_loss << "\n"
                      << "final stage-2 loss: " << r.final_stage2_loss << "\n";
            return 0;
        }
        if (infer->parsed()) {
            infer_file(checkpoint, input, out_dir, seed, scale);
            std::cout << "wrote " << out_dir << "\n";
            return 0;
        }
        if (eval->parsed()) {
            const std::string csv = out_dir == "out" ? "metrics.csv" : out_dir;
            return cmd_eval(pred_dir, gt_dir, csv, mu, peak_nits);
        }
        if (abl->parsed()) {
            const auto rows = ablate(load_config(config_path, overrides), out_dir, seeds);
            std::cout << ablation_csv(rows) << "ablation CSV: " << out_dir
                      << "/ablation.csv\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
