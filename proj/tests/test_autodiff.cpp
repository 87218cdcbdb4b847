#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gesturelab/autodiff/adam.hpp"
#include "gesturelab/autodiff/checkpoint.hpp"
#include "gesturelab/autodiff/nn.hpp"
#include "gesturelab/autodiff/tape.hpp"
#include "gesturelab/core/error.hpp"
#include "gesturelab/core/rng.hpp"
#include "gradcheck.hpp"

using namespace gesturelab;
using namespace gesturelab::autodiff;

namespace {

TensorData random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                         double hi = 1.0) {
    TensorData t = TensorData::zeros(std::move(shape));
    for (double& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("conv1d: identity kernel passes input through") {
    Tape tape;
    TensorData input = TensorData::zeros({5, 1});
    for (std::size_t t = 0; t < 5; ++t) input.v[t] = static_cast<double>(t + 1);
    Tape::Id x = tape.input(input, false);
    TensorData kernel = TensorData::zeros({1, 1, 1});
    kernel.v[0] = 1.0;
    Tape::Id k = tape.input(kernel, false);
    Tape::Id b = tape.input(TensorData::zeros({1}), false);
    Tape::Id out = tape.conv1d(x, k, b, 1, 0, 0, 1);
    CHECK(tape.value(out).shape == std::vector<std::size_t>{5, 1});
    for (std::size_t t = 0; t < 5; ++t)
        CHECK(tape.value(out).v[t] == doctest::Approx(input.v[t]));
}

TEST_CASE("conv1d: box kernel sums a sliding window") {
    Tape tape;
    TensorData input = TensorData::zeros({5, 1});
    for (std::size_t t = 0; t < 5; ++t) input.v[t] = static_cast<double>(t + 1);
    Tape::Id x = tape.input(input, false);
    TensorData kernel = TensorData::zeros({1, 1, 3});
    kernel.v = {1.0, 1.0, 1.0};
    Tape::Id k = tape.input(kernel, false);
    Tape::Id b = tape.input(TensorData::zeros({1}), false);
    Tape::Id out = tape.conv1d(x, k, b, 1, 0, 0, 1);
    REQUIRE(tape.value(out).size() == 3);
    CHECK(tape.value(out).v[0] == doctest::Approx(6.0));
    CHECK(tape.value(out).v[1] == doctest::Approx(9.0));
    CHECK(tape.value(out).v[2] == doctest::Approx(12.0));
}

TEST_CASE("conv1d gradient matches finite differences") {
    Rng rng(42);
    for (int rep = 0; rep < 3; ++rep) {
        auto input = random_tensor(rng, {6, 2});
        auto kernels = random_tensor(rng, {3, 2, 3});
        auto bias = random_tensor(rng, {3});
        auto target = random_tensor(rng, {6, 3});
        auto result = gradcheck::check(
            {input, kernels, bias},
            [&](Tape& t, const std::vector<Tape::Id>& in) {
                Tape::Id y = t.conv1d(in[0], in[1], in[2], 1, 1, 1, 1);
                return t.mse_loss(y, t.input(target, false));
            });
        CHECK(result.max_error <= 1e-4);
    }
}

TEST_CASE("conv1d: dilated causal output sees only the past") {
    Rng rng(4);
    auto input = random_tensor(rng, {8, 2});
    auto kernels = random_tensor(rng, {2, 2, 3});
    auto bias = random_tensor(rng, {2});
    auto run = [&](const TensorData& in) {
        Tape tape;
        Tape::Id x = tape.input(in, false);
        Tape::Id k = tape.input(kernels, false);
        Tape::Id b = tape.input(bias, false);
        // causal: pad_left = dilation * (W - 1)
        return tape.value(tape.conv1d(x, k, b, 1, 4, 0, 2)).v;
    };
    auto base = run(input);
    TensorData poked = input;
    poked.v[5 * 2 + 1] += 10.0;  // frame 5
    auto changed = run(poked);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(base[t * 2 + c] == changed[t * 2 + c]);
    CHECK(base.size() == changed.size());
    CHECK(base.size() == 8 * 2);
}

TEST_CASE("dense: identity weights, hand arithmetic, gradcheck") {
    Tape tape;
    TensorData w = TensorData::zeros({2, 2});
    w.v = {1.0, 0.0, 0.0, 1.0};
    Tape::Id x = tape.input(TensorData::vector({3.0, -2.0}), false);
    Tape::Id out = tape.dense(x, tape.input(w, false), tape.input(TensorData::zeros({2}), false));
    CHECK(tape.value(out).v[0] == 3.0);
    CHECK(tape.value(out).v[1] == -2.0);

    TensorData w2 = TensorData::zeros({2, 2});
    w2.v = {1.0, 2.0, 3.0, 4.0};
    Tape::Id out2 = tape.dense(tape.input(TensorData::vector({1.0, 1.0}), false),
                               tape.input(w2, false),
                               tape.input(TensorData::zeros({2}), false));
    CHECK(tape.value(out2).v[0] == 3.0);
    CHECK(tape.value(out2).v[1] == 7.0);

    Rng rng(7);
    auto input = random_tensor(rng, {4});
    auto weights = random_tensor(rng, {3, 4});
    auto bias = random_tensor(rng, {3});
    auto target = random_tensor(rng, {3});
    auto result = gradcheck::check({input, weights, bias},
                                   [&](Tape& t, const std::vector<Tape::Id>& in) {
                                       Tape::Id y = t.dense(in[0], in[1], in[2]);
                                       return t.mse_loss(y, t.input(target, false));
                                   });
    CHECK(result.max_error <= 1e-4);
}

TEST_CASE("recurrent cell: zero weights follow the bias-driven fixpoint") {
    ParameterStore store;
    Rng rng(1);
    RecurrentCell cell = RecurrentCell::create(store, rng, "cell", 2, 3);
    // zero the weights, set biases
    store.value(cell.wf).v.assign(store.value(cell.wf).size(), 0.0);
    store.value(cell.wh).v.assign(store.value(cell.wh).size(), 0.0);
    const double bf = 0.3, bh = 0.7;
    store.value(cell.bf).v.assign(3, bf);
    store.value(cell.bh).v.assign(3, bh);

    Tape tape;
    TapeBinding bind(tape, store);
    Tape::Id x = tape.input(TensorData::vector({0.5, -0.5}), false);
    Tape::Id h = tape.input(TensorData::zeros({3}), false);
    const double f = 1.0 / (1.0 + std::exp(-bf));
    const double c = std::tanh(bh);
    double expected = 0.0;
    for (int step = 0; step < 6; ++step) {
        h = cell.step(tape, bind, x, h);
        expected = c + (1.0 - f) * (expected - c);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(tape.value(h).v[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("recurrent cell: 3-step sequence gradcheck and determinism") {
    ParameterStore store;
    Rng rng(2);
    RecurrentCell cell = RecurrentCell::create(store, rng, "cell", 2, 3);
    Rng data_rng(3);
    auto seq = random_tensor(data_rng, {3, 2});
    auto target = random_tensor(data_rng, {3, 3});

    std::vector<TensorData> inputs;
    inputs.push_back(seq);
    for (std::size_t i = 0; i < store.count(); ++i) inputs.push_back(store.value(i));

    auto result = gradcheck::check(
        inputs, [&](Tape& t, const std::vector<Tape::Id>& in) {
            // bind parameters manually from the gradcheck inputs
            Tape::Id h = t.input(TensorData::zeros({3}), false);
            std::vector<Tape::Id> rows;
            for (std::size_t step = 0; step < 3; ++step) {
                Tape::Id x = t.row(in[0], step);
                Tape::Id xh = t.concat1d({x, h});
                Tape::Id f = t.sigmoid_op(t.dense(xh, in[1], in[2]));
                Tape::Id xg = t.concat1d({x, t.mul(f, h)});
                Tape::Id cand = t.tanh_op(t.dense(xg, in[3], in[4]));
                h = t.add(h, t.mul(f, t.sub(cand, h)));
                rows.push_back(h);
            }
            return t.mse_loss(t.stack_rows(rows), t.input(target, false));
        });
    CHECK(result.max_error <= 1e-4);

    // determinism: identical runs produce identical trajectories
    auto run = [&]() {
        Tape tape;
        TapeBinding bind(tape, store);
        Tape::Id s = tape.input(seq, false);
        return tape.value(cell.run(tape, bind, s)).v;
    };
    CHECK(run() == run());
}

TEST_CASE("fft_params: zero latent has zero A and B with mean gradient 1/T") {
    Tape tape;
    const std::size_t T = 8, N = 2;
    Tape::Id latent = tape.input(TensorData::zeros({T, N}), true);
    Tape::FftOut out = tape.fft_params(latent);
    for (std::size_t c = 0; c < N; ++c) {
        CHECK(tape.value(out.amplitude).v[c] == 0.0);
        CHECK(tape.value(out.offset).v[c] == 0.0);
        CHECK(tape.value(out.frequency).v[c] == 0.0);
    }
    // root = sum of offsets via a constant-weight dense
    TensorData ones = TensorData::zeros({1, N});
    ones.v.assign(N, 1.0);
    Tape::Id root = tape.dense(out.offset, tape.input(ones, false),
                               tape.input(TensorData::zeros({1}), false));
    tape.backward(root);
    for (std::size_t i = 0; i < T * N; ++i)
        CHECK(tape.grad(latent).v[i] == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("fft_params: scaling doubles amplitude, keeps frequency") {
    Rng rng(11);
    TensorData latent = random_tensor(rng, {34, 3});
    Tape tape;
    Tape::Id a = tape.input(latent, false);
    auto fa = tape.fft_params(a);
    TensorData doubled = latent;
    for (double& x : doubled.v) x *= 2.0;
    Tape::Id b = tape.input(doubled, false);
    auto fb = tape.fft_params(b);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(tape.value(fb.amplitude).v[c] ==
              doctest::Approx(2.0 * tape.value(fa.amplitude).v[c]).epsilon(1e-9));
        CHECK(tape.value(fb.frequency).v[c] ==
              doctest::Approx(tape.value(fa.frequency).v[c]).epsilon(1e-9));
    }
}

TEST_CASE("fft_params gradients match finite differences on a length-34 latent") {
    Rng rng(12);
    TensorData latent = random_tensor(rng, {34, 2});
    TensorData wa = random_tensor(rng, {1, 2});
    TensorData wf = random_tensor(rng, {1, 2});
    TensorData wb = random_tensor(rng, {1, 2});
    auto result = gradcheck::check(
        {latent}, [&](Tape& t, const std::vector<Tape::Id>& in) {
            auto f = t.fft_params(in[0]);
            Tape::Id zero = t.input(TensorData::zeros({1}), false);
            Tape::Id ra = t.dense(f.amplitude, t.input(wa, false), zero);
            Tape::Id rf = t.dense(f.frequency, t.input(wf, false), zero);
            Tape::Id rb = t.dense(f.offset, t.input(wb, false), zero);
            return t.element(t.add(t.add(ra, rf), rb), 0);
        });
    CHECK(result.max_error <= 1e-4);
}

TEST_CASE("periodic_reconstruct + atan2 pathway gradcheck") {
    Rng rng(13);
    TensorData amplitude = random_tensor(rng, {2}, 0.5, 2.0);
    TensorData frequency = random_tensor(rng, {2}, 0.05, 0.4);
    TensorData offset = random_tensor(rng, {2});
    TensorData sx = random_tensor(rng, {2}, 0.3, 1.0);
    TensorData sy = random_tensor(rng, {2}, 0.3, 1.0);
    TensorData target = random_tensor(rng, {6, 2});
    auto result = gradcheck::check(
        {amplitude, frequency, offset, sx, sy},
        [&](Tape& t, const std::vector<Tape::Id>& in) {
            Tape::Id phase = t.atan2_cycles(in[4], in[3]);
            Tape::Id rec = t.periodic_reconstruct(in[0], in[1], in[2], phase, 6);
            return t.mse_loss(rec, t.input(target, false));
        });
    CHECK(result.max_error <= 1e-4);
}

TEST_CASE("losses: exact values and gradchecks") {
    Tape tape;
    TensorData x = TensorData::zeros({2, 1});
    x.v = {0.0, 2.0};
    TensorData y = TensorData::zeros({2, 1});
    Tape::Id xi = tape.input(x, false);
    Tape::Id yi = tape.input(y, false);
    CHECK(tape.value(tape.l1_loss(xi, yi)).v[0] == doctest::Approx(1.0));
    CHECK(tape.value(tape.mse_loss(xi, yi)).v[0] == doctest::Approx(2.0));
    CHECK(tape.value(tape.velocity_l1_loss(xi, yi, 1.0)).v[0] == doctest::Approx(2.0));

    // identical inputs -> zero
    CHECK(tape.value(tape.l1_loss(xi, xi)).v[0] == 0.0);
    CHECK(tape.value(tape.mse_loss(xi, xi)).v[0] == 0.0);
    CHECK(tape.value(tape.velocity_l1_loss(xi, xi, 0.5)).v[0] == 0.0);

    // constant offset kills the velocity term
    TensorData z = TensorData::zeros({2, 1});
    z.v = {3.0, 5.0};
    TensorData zc = TensorData::zeros({2, 1});
    zc.v = {3.0 + 1.5, 5.0 + 1.5};
    CHECK(tape.value(tape.velocity_l1_loss(tape.input(z, false), tape.input(zc, false),
                                           0.1)).v[0] == doctest::Approx(0.0));

    Rng rng(14);
    for (int rep = 0; rep < 3; ++rep) {
        auto a = random_tensor(rng, {4, 3});
        auto b = random_tensor(rng, {4, 3});
        auto r1 = gradcheck::check({a, b}, [&](Tape& t, const std::vector<Tape::Id>& in) {
            return t.l1_loss(in[0], in[1]);
        });
        CHECK(r1.max_error <= 1e-4);
        auto r2 = gradcheck::check({a, b}, [&](Tape& t, const std::vector<Tape::Id>& in) {
            return t.mse_loss(in[0], in[1]);
        });
        CHECK(r2.max_error <= 1e-4);
        auto r3 = gradcheck::check({a, b}, [&](Tape& t, const std::vector<Tape::Id>& in) {
            return t.velocity_l1_loss(in[0], in[1], 1.0 / 15.0);
        });
        CHECK(r3.max_error <= 1e-4);
    }
}

TEST_CASE("channel_norm and softmax gradchecks") {
    Rng rng(15);
    auto x = random_tensor(rng, {6, 3});
    auto target = random_tensor(rng, {6, 3});
    auto r = gradcheck::check({x}, [&](Tape& t, const std::vector<Tape::Id>& in) {
        return t.mse_loss(t.channel_norm(in[0]), t.input(target, false));
    });
    CHECK(r.max_error <= 1e-4);

    auto logits = random_tensor(rng, {5});
    auto tgt = random_tensor(rng, {5}, 0.0, 1.0);
    auto r2 = gradcheck::check({logits}, [&](Tape& t, const std::vector<Tape::Id>& in) {
        return t.mse_loss(t.softmax_op(in[0]), t.input(tgt, false));
    });
    CHECK(r2.max_error <= 1e-4);
}

TEST_CASE("circular and masked square losses") {
    Tape tape;
    Tape::Id p = tape.input(TensorData::vector({0.1, 0.4}), true);
    Tape::Id loss = tape.circular_sq_loss_const(p, {0.9, 0.5}, {1.0, 1.0});
    // wrapped distances: |0.1-0.9| -> 0.2, |0.4-0.5| -> 0.1
    CHECK(tape.value(loss).v[0] == doctest::Approx(0.2 * 0.2 + 0.1 * 0.1));

    Tape::Id masked = tape.circular_sq_loss_const(p, {0.9, 0.5}, {0.0, 1.0});
    CHECK(tape.value(masked).v[0] == doctest::Approx(0.01));

    Rng rng(16);
    auto pred = random_tensor(rng, {4});
    auto r = gradcheck::check({pred}, [&](Tape& t, const std::vector<Tape::Id>& in) {
        return t.circular_sq_loss_const(in[0], {0.2, 0.7, 0.05, 0.9}, {1, 1, 0, 1});
    });
    CHECK(r.max_error <= 1e-4);
    auto r2 = gradcheck::check({pred}, [&](Tape& t, const std::vector<Tape::Id>& in) {
        return t.sq_loss_const(in[0], {0.2, -0.7, 0.05, 0.9}, {1, 0, 1, 1});
    });
    CHECK(r2.max_error <= 1e-4);
}

TEST_CASE("fan-out accumulates gradients on a diamond graph") {
    Tape tape;
    Tape::Id x = tape.input(TensorData::scalar(1.5), true);
    Tape::Id u = tape.scale(x, 2.0);
    Tape::Id w = tape.scale(x, 3.0);
    Tape::Id z = tape.mul(u, w);  // 6 x^2, dz/dx = 12 x
    tape.backward(z);
    CHECK(tape.grad(x).v[0] == doctest::Approx(12.0 * 1.5).epsilon(1e-12));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    ParameterStore store;
    store.add("p", TensorData::vector({1.0, -2.0, 3.0}));
    Adam adam(5.0e-4);
    std::vector<TensorData> grads{TensorData::zeros({3})};
    adam.step(store, grads);
    CHECK(store.value(0).v == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: first step moves against the gradient by about lr") {
    ParameterStore store;
    store.add("p", TensorData::vector({1.0, 1.0}));
    Adam adam(5.0e-4);
    TensorData g = TensorData::vector({0.3, -0.7});
    adam.step(store, {g});
    // bias-corrected first step: delta = -lr * g / (|g| + eps) ~ -lr sign(g)
    CHECK(store.value(0).v[0] == doctest::Approx(1.0 - 5.0e-4).epsilon(1e-6));
    CHECK(store.value(0).v[1] == doctest::Approx(1.0 + 5.0e-4).epsilon(1e-6));
    CHECK(std::fabs(store.value(0).v[0] - 1.0) <= 5.0e-4 + 1e-12);
}

TEST_CASE("adam: non-finite gradient names the parameter") {
    ParameterStore store;
    store.add("enc.w", TensorData::vector({1.0}));
    Adam adam(1e-3);
    TensorData g = TensorData::vector({std::nan("")});
    try {
        adam.step(store, {g});
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("enc.w") != std::string::npos);
    }
}

TEST_CASE("checkpoint round-trips a parameter store") {
    ParameterStore store;
    Rng rng(9);
    store.add("a", random_tensor(rng, {3, 4}));
    store.add("b.bias", random_tensor(rng, {7}));
    store.add("c", TensorData::scalar(0.25));
    const std::string path =
        (std::filesystem::temp_directory_path() / "glab_ckpt_test.bin").string();
    save_checkpoint(path, store);
    ParameterStore loaded = load_checkpoint(path);
    REQUIRE(loaded.count() == store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
        CHECK(loaded.entry(i).name == store.entry(i).name);
        CHECK(loaded.entry(i).value.shape == store.entry(i).value.shape);
        CHECK(loaded.entry(i).value.v == store.entry(i).value.v);
    }
    std::filesystem::remove(path);
}
