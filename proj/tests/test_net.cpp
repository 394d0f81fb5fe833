#include <doctest.h>

#include <cmath>
#include <functional>

#include "hdrcm/net.hpp"

using namespace hdrcm;

TEST_SUITE_BEGIN("net");

namespace {

NetConfig tiny_config() {
    NetConfig cfg;
    cfg.base_channels = 4;
    cfg.blocks_per_stage = 1;
    cfg.time_embed_dim = 8;
    return cfg;
}

template <typename T>
Tensor<T> random_tensor(SeededRng& rng, int n, int c, int h, int w, double scale = 1.0) {
    Tensor<T> t(n, c, h, w);
    for (auto& v : t.v) v = static_cast<T>(rng.next_normal() * scale);
    return t;
}

// closed-form parameter count derived from the config alone
std::int64_t expected_param_count(const NetConfig& cfg) {
    const auto ch = cfg.stage_channels();
    const std::int64_t d = cfg.time_embed_dim;
    auto conv = [](std::int64_t ci, std::int64_t co, std::int64_t k) {
        return ci * co * k * k + co;
    };
    auto gn = [](std::int64_t c) { return 2 * c; };
    auto lin = [](std::int64_t i, std::int64_t o) { return i * o + o; };
    auto block = [&](std::int64_t ci, std::int64_t co) {
        std::int64_t n = gn(ci) + conv(ci, co, 3) + lin(d, co) + gn(co) + conv(co, co, 3);
        if (ci != co) n += conv(ci, co, 1);
        return n;
    };
    std::int64_t total = 2 * lin(d, d) + conv(cfg.in_channels, ch[0], 3);
    for (int s = 0; s < 3; ++s) {
        total += cfg.blocks_per_stage * block(ch[s], ch[s]);
        total += conv(ch[s], s < 2 ? ch[s + 1] : ch[2], 3);
    }
    total += 2 * block(ch[2], ch[2]);
    const std::int64_t up_in[3] = {ch[1], ch[2], ch[2]};  // indexed by stage
    for (int s = 2; s >= 0; --s) {
        total += conv(up_in[s], ch[s], 3);
        total += block(2 * ch[s], ch[s]);
        total += (cfg.blocks_per_stage - 1) * block(ch[s], ch[s]);
    }
    total += gn(ch[0]) + conv(ch[0], cfg.out_channels, 3);
    return total;
}

}  // namespace

TEST_CASE("init: same seed gives identical parameters") {
    ConsistencyNet<float> a, b;
    a.build(tiny_config());
    b.build(tiny_config());
    SeededRng ra(99), rb(99);
    init_params(a, ra);
    init_params(b, rb);
    auto pa = a.params(), pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].value->size() == pb[i].value->size());
        for (std::size_t j = 0; j < pa[i].value->size(); ++j)
            CHECK((*pa[i].value)[j] == (*pb[i].value)[j]);
    }
}

TEST_CASE("init: zero head makes the map reduce to the skip path") {
    ConsistencyNet<double> net;
    net.build(tiny_config());
    SeededRng rng(101);
    init_params(net, rng);
    SeededRng dr(102);
    Tensor<double> x = random_tensor<double>(dr, 2, 3, 16, 16);
    Tensor<double> y = random_tensor<double>(dr, 2, 3, 16, 16);
    const std::vector<double> ts{0.5, 0.9};
    Tensor<double> out = consistency_out(net, x, ts, y, false);
    for (int n = 0; n < 2; ++n) {
        const double cs = c_skip(ts[n], net.cfg.eps_t, net.cfg.data_scale);
        for (int c = 0; c < 3; ++c)
            for (int yy = 0; yy < 16; ++yy)
                for (int xx = 0; xx < 16; ++xx)
                    CHECK(out.at(n, c, yy, xx) ==
                          doctest::Approx(cs * x.at(n, c, yy, xx)).epsilon(1e-12));
    }
}

TEST_CASE("parameter count matches the closed-form sum") {
    for (int base : {4, 8, 16}) {
        NetConfig cfg = tiny_config();
        cfg.base_channels = base;
        cfg.blocks_per_stage = base == 4 ? 1 : 2;
        ConsistencyNet<float> net;
        net.build(cfg);
        CHECK(net.param_count() == expected_param_count(cfg));
    }
    // the default config lands in the intended desk-scale band
    NetConfig full;
    ConsistencyNet<float> net;
    net.build(full);
    CHECK(net.param_count() == expected_param_count(full));
    CHECK(net.param_count() > 500000);
    CHECK(net.param_count() < 4000000);
}

TEST_CASE("raw_forward: shape contract and determinism") {
    ConsistencyNet<float> net;
    net.build(tiny_config());
    SeededRng rng(103);
    init_params(net, rng);
    SeededRng dr(104);
    for (int size : {16, 24}) {
        Tensor<float> x = random_tensor<float>(dr, 1, 6, size, size);
        Tensor<float> out = net.raw_forward(x, {0.4}, false);
        CHECK(out.n == 1);
        CHECK(out.c == 3);
        CHECK(out.h == size);
        CHECK(out.w == size);
        Tensor<float> out2 = net.raw_forward(x, {0.4}, false);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.v[i] == out2.v[i]);
    }
    Tensor<float> bad = random_tensor<float>(dr, 1, 6, 12, 12);
    CHECK_THROWS(net.raw_forward(bad, {0.4}, false));  // 12 not divisible by 8
}

TEST_CASE("raw_forward: counter increments once per call") {
    ConsistencyNet<float> net;
    net.build(tiny_config());
    SeededRng rng(105);
    init_params(net, rng);
    SeededRng dr(106);
    Tensor<float> x = random_tensor<float>(dr, 1, 6, 8, 8);
    const auto before = net.forward_evals;
    net.raw_forward(x, {0.5}, false);
    CHECK(net.forward_evals == before + 1);
    net.raw_forward(x, {0.5}, false);
    CHECK(net.forward_evals == before + 2);
}

TEST_CASE("consistency_out: exact boundary identity for random parameters") {
    ConsistencyNet<double> net;
    net.build(tiny_config());
    SeededRng rng(107);
    init_params(net, rng);
    // perturb every parameter so nothing special remains of the zero head
    for (auto& p : net.params())
        for (auto& v : *p.value) v += 0.05 * rng.next_normal();
    SeededRng dr(108);
    Tensor<double> x = random_tensor<double>(dr, 2, 3, 8, 8);
    Tensor<double> y = random_tensor<double>(dr, 2, 3, 8, 8);
    const double eps_t = net.cfg.eps_t;
    Tensor<double> out = consistency_out(net, x, {eps_t, eps_t}, y, false);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.v[i] == x.v[i]);
}

TEST_CASE("skip coefficients: closed forms") {
    const double eps_t = 0.002, sd = 0.5;
    CHECK(c_skip(eps_t, eps_t, sd) == 1.0);
    CHECK(c_out(eps_t, eps_t, sd) == 0.0);
    CHECK(c_skip(eps_t + sd, eps_t, sd) == doctest::Approx(0.5).epsilon(1e-12));
    double prev_skip = 1.1, prev_out = -0.1;
    for (double t = eps_t; t <= 1.0; t += 0.05) {
        CHECK(c_skip(t, eps_t, sd) < prev_skip);
        CHECK(c_out(t, eps_t, sd) > prev_out);
        prev_skip = c_skip(t, eps_t, sd);
        prev_out = c_out(t, eps_t, sd);
    }
}

TEST_CASE("time sensitivity: changing t changes the output") {
    ConsistencyNet<double> net;
    net.build(tiny_config());
    SeededRng rng(109);
    init_params(net, rng);
    for (auto& p : net.params())
        for (auto& v : *p.value) v += 0.05 * rng.next_normal();
    SeededRng dr(110);
    Tensor<double> x = random_tensor<double>(dr, 1, 6, 8, 8);
    Tensor<double> a = net.raw_forward(x, {0.3}, false);
    Tensor<double> b = net.raw_forward(x, {0.8}, false);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += std::fabs(a.v[i] - b.v[i]);
    CHECK(diff > 1e-6);
}

TEST_CASE("ema: fixed point, copy at zero decay, arithmetic") {
    ConsistencyNet<float> net;
    net.build(tiny_config());
    SeededRng rng(111);
    init_params(net, rng);

    EmaState<float> ema;
    ema.init(net, 0.999);
    ema.update(net);  // shadow == net is a fixed point
    auto ps = net.params(), qs = ema.shadow.params();
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (std::size_t j = 0; j < ps[i].value->size(); ++j)
            CHECK((*qs[i].value)[j] == (*ps[i].value)[j]);

    // mu = 0: shadow copies the online net after one update
    EmaState<float> ema0;
    ema0.init(net, 0.0);
    for (auto& p : net.params())
        for (auto& v : *p.value) v += 1.0f;
    ema0.update(net);
    auto qs0 = ema0.shadow.params();
    ps = net.params();
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (std::size_t j = 0; j < ps[i].value->size(); ++j)
            CHECK((*qs0[i].value)[j] == (*ps[i].value)[j]);
}

TEST_CASE("ema: scalar arithmetic and contraction") {
    // theta_minus = 0, theta = 1, mu = 0.999 -> 0.001
    ConsistencyNet<double> net;
    net.build(tiny_config());
    for (auto& p : net.params()) std::fill(p.value->begin(), p.value->end(), 1.0);
    EmaState<double> ema;
    ema.init(net, 0.999);
    for (auto& p : ema.shadow.params()) std::fill(p.value->begin(), p.value->end(), 0.0);
    ema.update(net);
    for (auto& p : ema.shadow.params())
        for (double v : *p.value) CHECK(v == doctest::Approx(0.001).epsilon(1e-12));
    // ||shadow_new - theta|| = mu * ||shadow_old - theta||
    CHECK(std::fabs(1.0 - 0.001 - 0.999 * (1.0 - 0.0)) < 1e-15);
}

TEST_CASE("gradients: finite differences on a tiny net at 64-bit") {
    ConsistencyNet<double> net;
    net.build(tiny_config());
    SeededRng rng(113);
    init_params(net, rng);
    for (auto& p : net.params())
        for (auto& v : *p.value) v += 0.05 * rng.next_normal();

    SeededRng dr(114);
    const Tensor<double> x = random_tensor<double>(dr, 2, 6, 8, 8, 0.5);
    const std::vector<double> ts{0.37, 0.81};

    // quadratic probe loss ||raw||^2 / 2 -> d loss / d raw = raw
    auto loss_fn = [&]() {
        Tensor<double> out = net.raw_forward(x, ts, false);
        double l = 0.0;
        for (double v : out.v) l += 0.5 * v * v;
        return l;
    };

    net.zero_grads();
    Tensor<double> out = net.raw_forward(x, ts, true);
    net.raw_backward(out);

    const double h = 1e-5;
    int checked = 0;
    SeededRng pick(115);
    for (auto& p : net.params()) {
        // a deterministic subsample of entries per tensor
        const int samples = std::min<std::size_t>(4, p.value->size());
        for (int s = 0; s < samples; ++s) {
            const std::size_t j =
                static_cast<std::size_t>(pick.next_double() * p.value->size()) %
                p.value->size();
            const double orig = (*p.value)[j];
            (*p.value)[j] = orig + h;
            const double lp = loss_fn();
            (*p.value)[j] = orig - h;
            const double lm = loss_fn();
            (*p.value)[j] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = (*p.grad)[j];
            const double rel =
                std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
            CHECK(rel < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("gradients: constant loss gives zero gradients") {
    ConsistencyNet<double> net;
    net.build(tiny_config());
    SeededRng rng(117);
    init_params(net, rng);
    SeededRng dr(118);
    Tensor<double> x = random_tensor<double>(dr, 1, 6, 8, 8);
    net.zero_grads();
    Tensor<double> out = net.raw_forward(x, {0.6}, true);
    Tensor<double> dout(out.n, out.c, out.h, out.w);  // zeros
    net.raw_backward(dout);
    for (auto& p : net.params())
        for (double g : *p.grad) CHECK(g == 0.0);
}

TEST_CASE("gradients: deterministic under fixed inputs") {
    ConsistencyNet<double> net;
    net.build(tiny_config());
    SeededRng rng(119);
    init_params(net, rng);
    SeededRng dr(120);
    Tensor<double> x = random_tensor<double>(dr, 1, 6, 8, 8);

    auto run = [&]() {
        net.zero_grads();
        Tensor<double> out = net.raw_forward(x, {0.6}, true);
        net.raw_backward(out);
        std::vector<double> flat;
        for (auto& p : net.params())
            flat.insert(flat.end(), p.grad->begin(), p.grad->end());
        return flat;
    };
    const auto g1 = run();
    const auto g2 = run();
    REQUIRE(g1.size() == g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_SUITE_END();
