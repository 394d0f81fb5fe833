#include "hdrcm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace hdrcm {

namespace {

struct Binding {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + s + "'");
    }
}

long long parse_int(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad integer value for " + key + ": '" + s + "'");
    }
}

std::vector<Binding> make_bindings() {
    std::vector<Binding> b;
    auto add_d = [&b](const std::string& key, double RunConfig::* f) {
        b.push_back({key, [f](const RunConfig& c) { return fmt_double(c.*f); },
                     [f, key](RunConfig& c, const std::string& s) { c.*f = parse_double(key, s); }});
    };
    auto add_i = [&b](const std::string& key, int RunConfig::* f) {
        b.push_back({key, [f](const RunConfig& c) { return std::to_string(c.*f); },
                     [f, key](RunConfig& c, const std::string& s) {
                         c.*f = static_cast<int>(parse_int(key, s));
                     }});
    };
    auto add_u = [&b](const std::string& key, std::uint64_t RunConfig::* f) {
        b.push_back({key, [f](const RunConfig& c) { return std::to_string(c.*f); },
                     [f, key](RunConfig& c, const std::string& s) {
                         c.*f = static_cast<std::uint64_t>(parse_int(key, s));
                     }});
    };
    auto add_s = [&b](const std::string& key, std::string RunConfig::* f) {
        b.push_back({key, [f](const RunConfig& c) { return c.*f; },
                     [f](RunConfig& c, const std::string& s) { c.*f = s; }});
    };

    add_i("data.scene_size", &RunConfig::data_scene_size);
    add_i("data.train_scenes", &RunConfig::data_train_scenes);
    add_i("data.eval_scenes", &RunConfig::data_eval_scenes);
    add_i("data.eval_size", &RunConfig::data_eval_size);
    add_u("data.seed", &RunConfig::data_seed);
    add_d("data.exp_min", &RunConfig::data_exp_min);
    add_d("data.exp_max", &RunConfig::data_exp_max);
    add_d("data.sigma_read", &RunConfig::data_sigma_read);
    add_d("data.sigma_shot", &RunConfig::data_sigma_shot);
    add_d("data.light_min", &RunConfig::data_light_min);
    add_d("data.light_max", &RunConfig::data_light_max);

    // nested structs need explicit lambdas
    auto add_nested_d = [&b](const std::string& key, std::function<double&(RunConfig&)> ref) {
        b.push_back({key,
                     [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); },
                     [ref, key](RunConfig& c, const std::string& s) { ref(c) = parse_double(key, s); }});
    };
    auto add_nested_i = [&b](const std::string& key, std::function<int&(RunConfig&)> ref) {
        b.push_back({key,
                     [ref](const RunConfig& c) {
                         return std::to_string(ref(const_cast<RunConfig&>(c)));
                     },
                     [ref, key](RunConfig& c, const std::string& s) {
                         ref(c) = static_cast<int>(parse_int(key, s));
                     }});
    };
    auto add_nested_b = [&b](const std::string& key, std::function<bool&(RunConfig&)> ref) {
        b.push_back({key,
                     [ref](const RunConfig& c) {
                         return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
                     },
                     [ref, key](RunConfig& c, const std::string& s) {
                         if (s != "true" && s != "false")
                             throw std::invalid_argument("config: bad bool for " + key);
                         ref(c) = s == "true";
                     }});
    };

    add_nested_d("mask.p_lo", [](RunConfig& c) -> double& { return c.mask.p_lo; });
    add_nested_d("mask.p_hi", [](RunConfig& c) -> double& { return c.mask.p_hi; });
    add_nested_d("mask.tau", [](RunConfig& c) -> double& { return c.mask.tau; });
    add_nested_d("mask.eps_q", [](RunConfig& c) -> double& { return c.mask.eps_q; });

    add_nested_d("schedule.T", [](RunConfig& c) -> double& { return c.schedule.final_t; });
    add_nested_d("schedule.eps_t", [](RunConfig& c) -> double& { return c.schedule.eps_t; });
    add_nested_i("schedule.steps", [](RunConfig& c) -> int& { return c.schedule.steps; });
    add_nested_d("schedule.sigma_g_scale",
                 [](RunConfig& c) -> double& { return c.schedule.sigma_g_scale; });
    add_nested_d("schedule.sigma_u_scale",
                 [](RunConfig& c) -> double& { return c.schedule.sigma_u_scale; });
    add_nested_d("schedule.sigma_o_scale",
                 [](RunConfig& c) -> double& { return c.schedule.sigma_o_scale; });
    add_nested_d("schedule.lambda_u", [](RunConfig& c) -> double& { return c.schedule.lambda_u; });
    add_nested_d("schedule.blur_sigma",
                 [](RunConfig& c) -> double& { return c.schedule.blur_sigma; });

    add_i("model.base_channels", &RunConfig::model_base_channels);
    add_i("model.blocks_per_stage", &RunConfig::model_blocks_per_stage);
    add_i("model.time_embed_dim", &RunConfig::model_time_embed_dim);
    add_d("model.data_scale", &RunConfig::model_data_scale);

    add_nested_d("elc.kappa_L_lo", [](RunConfig& c) -> double& { return c.elc.kappa_L_lo; });
    add_nested_d("elc.kappa_L_hi", [](RunConfig& c) -> double& { return c.elc.kappa_L_hi; });
    add_nested_d("elc.kappa_C_hi", [](RunConfig& c) -> double& { return c.elc.kappa_C_hi; });
    add_nested_d("elc.kappa_C_lo", [](RunConfig& c) -> double& { return c.elc.kappa_C_lo; });
    add_nested_d("elc.tau_s", [](RunConfig& c) -> double& { return c.elc.tau_s; });
    add_nested_d("elc.tau_h", [](RunConfig& c) -> double& { return c.elc.tau_h; });
    add_nested_d("elc.delta_s", [](RunConfig& c) -> double& { return c.elc.delta_s; });
    add_nested_d("elc.delta_h", [](RunConfig& c) -> double& { return c.elc.delta_h; });
    add_nested_d("elc.alpha_exp", [](RunConfig& c) -> double& { return c.elc.alpha_exp; });
    add_nested_d("elc.c0", [](RunConfig& c) -> double& { return c.elc.c0; });
    add_nested_d("elc.lambda_L0", [](RunConfig& c) -> double& { return c.elc.lambda_L0; });
    add_nested_d("elc.lambda_C0", [](RunConfig& c) -> double& { return c.elc.lambda_C0; });
    add_nested_d("elc.eps_charb", [](RunConfig& c) -> double& { return c.elc.eps_charb; });
    add_nested_b("elc.uniform", [](RunConfig& c) -> bool& { return c.elc.uniform; });

    add_d("optim.lr", &RunConfig::optim_lr);
    add_d("optim.lr_min", &RunConfig::optim_lr_min);
    add_d("optim.beta1", &RunConfig::optim_beta1);
    add_d("optim.beta2", &RunConfig::optim_beta2);
    add_d("optim.eps", &RunConfig::optim_eps);
    add_d("optim.weight_decay", &RunConfig::optim_weight_decay);
    add_d("optim.clip_norm", &RunConfig::optim_clip_norm);
    add_d("optim.stage2_lr_scale", &RunConfig::optim_stage2_lr_scale);

    add_s("train.mode", &RunConfig::train_mode);
    add_i("train.stage1_iters", &RunConfig::train_stage1_iters);
    add_i("train.stage2_iters", &RunConfig::train_stage2_iters);
    add_i("train.batch_size", &RunConfig::train_batch_size);
    add_i("train.crop", &RunConfig::train_crop);
    add_u("train.seed", &RunConfig::train_seed);
    add_d("train.lambda_ct_stage2", &RunConfig::train_lambda_ct_stage2);
    add_d("train.lambda_elc", &RunConfig::train_lambda_elc);
    add_d("train.ema_decay", &RunConfig::train_ema_decay);
    add_i("train.log_every", &RunConfig::train_log_every);

    add_d("eval.mu", &RunConfig::eval_mu);
    add_d("eval.peak_nits", &RunConfig::eval_peak_nits);

    add_s("infer.terminal", &RunConfig::infer_terminal);
    return b;
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> b = make_bindings();
    return b;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto z = s.find_last_not_of(" \t\r\n");
    return s.substr(a, z - a + 1);
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& b : bindings())
        if (b.key == key) {
            b.set(cfg, value);
            return;
        }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

}  // namespace

SceneConfig RunConfig::scene_config(int size) const {
    SceneConfig s;
    s.height = size;
    s.width = size;
    s.light_min = data_light_min;
    s.light_max = data_light_max;
    return s;
}

LdrSimConfig RunConfig::ldr_config() const {
    LdrSimConfig l;
    l.exp_min = data_exp_min;
    l.exp_max = data_exp_max;
    l.sigma_read = data_sigma_read;
    l.sigma_shot = data_sigma_shot;
    return l;
}

NetConfig RunConfig::net_config() const {
    NetConfig n;
    n.base_channels = model_base_channels;
    n.blocks_per_stage = model_blocks_per_stage;
    n.time_embed_dim = model_time_embed_dim;
    n.data_scale = model_data_scale;
    n.eps_t = schedule.eps_t;
    return n;
}

TrajectoryMode RunConfig::trajectory_mode() const {
    if (train_mode == "baseline") return TrajectoryMode::Baseline;
    if (train_mode == "two_mask") return TrajectoryMode::TwoMask;
    if (train_mode == "three_mask") return TrajectoryMode::ThreeMask;
    throw std::invalid_argument("config: train.mode must be baseline|two_mask|three_mask");
}

void RunConfig::validate() const {
    mask.validate();
    schedule.validate();
    net_config().validate();
    elc.validate();
    (void)trajectory_mode();
    if (infer_terminal != "blended" && infer_terminal != "pure_noise")
        throw std::invalid_argument("config: infer.terminal must be blended|pure_noise");
    if (train_crop % 8 != 0 || data_eval_size % 8 != 0)
        throw std::invalid_argument("config: crop and eval_size must be divisible by 8");
    if (train_batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (train_crop > data_scene_size)
        throw std::invalid_argument("config: crop larger than scene size");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value'");
        set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--set expects section.key=value, got '" + assignment + "'");
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const auto& b : bindings()) {
        const std::string sec = b.key.substr(0, b.key.find('.'));
        if (sec != section) {
            if (!section.empty()) os << "\n";
            section = sec;
        }
        os << b.key << " = " << b.get(cfg) << "\n";
    }
    return os.str();
}

std::string config_hash(const RunConfig& cfg) {
    const std::string s = serialize_config(cfg);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace hdrcm
