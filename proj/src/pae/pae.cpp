#include "gesturelab/pae/pae.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gesturelab/autodiff/checkpoint.hpp"
#include "gesturelab/core/error.hpp"
#include "gesturelab/core/rng.hpp"

namespace gesturelab::pae {

using autodiff::Tape;
using autodiff::TapeBinding;
using autodiff::TensorData;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void validate_config(const PAEConfig& c) {
    if (c.latent_channels < 1) throw Error("pae: latent_channels must be >= 1");
    if (c.window < 2 || c.window % 2 != 0) throw Error("pae: window must be even");
    if (c.velocity_weight < 0.0) throw Error("pae: velocity_weight must be >= 0");
    if (c.conv_width % 2 == 0) throw Error("pae: conv_width must be odd");
}

} // namespace

PAEModel create_model(const PAEConfig& config) {
    validate_config(config);
    PAEModel m;
    m.config = config;
    Rng rng(config.seed);
    m.enc1 = autodiff::Conv1dLayer::create_same(m.params, rng, "enc1",
                                                config.input_channels,
                                                config.encoder_hidden, config.conv_width);
    m.enc2 = autodiff::Conv1dLayer::create_same(m.params, rng, "enc2",
                                                config.encoder_hidden,
                                                config.latent_channels, config.conv_width);
    m.phase_heads.reserve(config.latent_channels);
    for (std::size_t c = 0; c < config.latent_channels; ++c)
        m.phase_heads.push_back(autodiff::DenseLayer::create(
            m.params, rng, "phase_head." + std::to_string(c), config.window, 2));
    m.np1 = autodiff::Conv1dLayer::create_same(m.params, rng, "np1",
                                               config.latent_channels,
                                               config.nonperiodic_hidden, config.conv_width);
    m.np2 = autodiff::Conv1dLayer::create_same(m.params, rng, "np2",
                                               config.nonperiodic_hidden,
                                               config.latent_channels, config.conv_width);
    m.dec = autodiff::Conv1dLayer::create_same(m.params, rng, "dec",
                                               config.latent_channels,
                                               config.input_channels, config.conv_width);
    return m;
}

Tape::Id encode(Tape& tape, const TapeBinding& bind, const PAEModel& model,
                Tape::Id input) {
    const TensorData& x = tape.value(input);
    if (x.rank() != 2 || x.dim(0) != model.config.window ||
        x.dim(1) != model.config.input_channels)
        throw Error("encode: expected a " + std::to_string(model.config.window) + " x " +
                    std::to_string(model.config.input_channels) + " window");
    Tape::Id h = tape.tanh_op(model.enc1.apply(tape, bind, input));
    return model.enc2.apply(tape, bind, h);
}

PeriodicNodes periodic_branch(Tape& tape, const TapeBinding& bind, const PAEModel& model,
                              Tape::Id latent) {
    const std::size_t T = tape.value(latent).dim(0);
    const std::size_t N = tape.value(latent).dim(1);
    Tape::FftOut fft = tape.fft_params(latent);
    std::vector<Tape::Id> phases(N);
    for (std::size_t c = 0; c < N; ++c) {
        Tape::Id channel = tape.col(latent, c);
        Tape::Id xy = model.phase_heads[c].apply(tape, bind, channel);
        phases[c] = tape.atan2_cycles(tape.element(xy, 1), tape.element(xy, 0));
    }
    PeriodicNodes out;
    out.amplitude = fft.amplitude;
    out.frequency = fft.frequency;
    out.offset = fft.offset;
    out.phase = tape.stack_scalars(phases);
    out.reconstruction =
        tape.periodic_reconstruct(out.amplitude, out.frequency, out.offset, out.phase, T);
    return out;
}

Tape::Id nonperiodic_branch(Tape& tape, const TapeBinding& bind, const PAEModel& model,
                            Tape::Id latent) {
    const TensorData& y = tape.value(latent);
    if (!model.config.nonperiodic_enabled)
        return tape.input(TensorData::zeros({y.dim(0), y.dim(1)}), false);
    Tape::Id h = tape.tanh_op(tape.channel_norm(model.np1.apply(tape, bind, latent)));
    return model.np2.apply(tape, bind, h);
}

Tape::Id decode(Tape& tape, const TapeBinding& bind, const PAEModel& model,
                Tape::Id periodic, Tape::Id nonperiodic) {
    return model.dec.apply(tape, bind, tape.add(periodic, nonperiodic));
}

Tape::Id reconstruction_loss(Tape& tape, Tape::Id target, Tape::Id prediction,
                             double velocity_weight, double fps) {
    Tape::Id l1 = tape.l1_loss(prediction, target);
    if (velocity_weight == 0.0) return l1;
    Tape::Id vel = tape.velocity_l1_loss(prediction, target, 1.0 / fps);
    return tape.add(l1, tape.scale(vel, velocity_weight));
}

namespace {

struct ForwardNodes {
    Tape::Id input, latent, nonperiodic, reconstruction;
    PeriodicNodes periodic;
};

ForwardNodes forward(Tape& tape, const TapeBinding& bind, const PAEModel& model,
                     const Matrix& window) {
    ForwardNodes n;
    n.input = tape.input(TensorData::from_matrix(window), false);
    n.latent = encode(tape, bind, model, n.input);
    n.periodic = periodic_branch(tape, bind, model, n.latent);
    n.nonperiodic = nonperiodic_branch(tape, bind, model, n.latent);
    n.reconstruction = decode(tape, bind, model, n.periodic.reconstruction, n.nonperiodic);
    return n;
}

} // namespace

Matrix encode_values(const PAEModel& model, const Matrix& window) {
    Tape tape;
    TapeBinding bind(tape, model.params);
    Tape::Id input = tape.input(TensorData::from_matrix(window), false);
    return tape.value(encode(tape, bind, model, input)).to_matrix();
}

Matrix reconstruct_values(const PAEModel& model, const Matrix& window) {
    Tape tape;
    TapeBinding bind(tape, model.params);
    return tape.value(forward(tape, bind, model, window).reconstruction).to_matrix();
}

std::vector<spectrum::PeriodicParams> window_params(const PAEModel& model,
                                                    const Matrix& window) {
    Tape tape;
    TapeBinding bind(tape, model.params);
    ForwardNodes n = forward(tape, bind, model, window);
    const auto& a = tape.value(n.periodic.amplitude).v;
    const auto& f = tape.value(n.periodic.frequency).v;
    const auto& b = tape.value(n.periodic.offset).v;
    const auto& s = tape.value(n.periodic.phase).v;
    std::vector<spectrum::PeriodicParams> out(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) out[c] = {a[c], f[c], b[c], s[c]};
    return out;
}

void seed_phase_heads(PAEModel& model, const Matrix& latent) {
    const std::size_t T = model.config.window;
    if (latent.rows() != T || latent.cols() != model.config.latent_channels)
        throw Error("seed_phase_heads: latent shape mismatch");
    for (std::size_t c = 0; c < model.config.latent_channels; ++c) {
        const auto params = spectrum::extract_params(latent.col(c));
        const double f = params.frequency;
        // Linear functionals reproducing S = atan2(-Re, -Im) of the
        // mean-removed projection at frequency f:
        //   s_x[t] =  sin(2pi f t) - mean,  s_y[t] = -(cos(2pi f t) - mean)
        std::vector<double> sx(T), sy(T);
        double mx = 0.0, my = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            sx[t] = std::sin(kTwoPi * f * static_cast<double>(t));
            sy[t] = -std::cos(kTwoPi * f * static_cast<double>(t));
            mx += sx[t];
            my += sy[t];
        }
        mx /= static_cast<double>(T);
        my /= static_cast<double>(T);
        auto& w = model.params.value(model.phase_heads[c].weights);
        auto& b = model.params.value(model.phase_heads[c].bias);
        for (std::size_t t = 0; t < T; ++t) {
            w.v[t] = sx[t] - mx;      // row 0 -> s_x
            w.v[T + t] = sy[t] - my;  // row 1 -> s_y
        }
        b.v[0] = 0.0;
        b.v[1] = 0.0;
    }
}

TrainResult train(PAEModel& model, const std::vector<Matrix>& windows) {
    const PAEConfig& cfg = model.config;
    if (windows.empty()) throw Error("train: need at least one window");
    for (const auto& w : windows) {
        if (w.rows() != cfg.window || w.cols() != cfg.input_channels)
            throw Error("train: window shape mismatch");
        if (!w.all_finite()) throw Error("train: non-finite window");
    }

    // Seed the phase heads from the mean initial latent so the atan2 heads
    // start near the analytic phase instead of a wraparound plateau.
    {
        Matrix mean_latent(cfg.window, cfg.latent_channels, 0.0);
        const std::size_t probe = std::min(windows.size(), cfg.batch_size);
        for (std::size_t i = 0; i < probe; ++i) {
            Matrix latent = encode_values(model, windows[i]);
            for (std::size_t t = 0; t < cfg.window; ++t)
                for (std::size_t c = 0; c < cfg.latent_channels; ++c)
                    mean_latent(t, c) += latent(t, c) / static_cast<double>(probe);
        }
        seed_phase_heads(model, mean_latent);
    }

    autodiff::Adam adam(cfg.learning_rate);
    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.curve.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the deterministic rng
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                shuffle_rng.uniform_int(0, static_cast<long>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        EpochStats stats;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<TensorData> grads;
            for (std::size_t i = 0; i < model.params.count(); ++i)
                grads.push_back(TensorData::zeros(model.params.value(i).shape));

            for (std::size_t i = start; i < end; ++i) {
                const Matrix& window = windows[order[i]];
                Tape tape;
                TapeBinding bind(tape, model.params);
                ForwardNodes n = forward(tape, bind, model, window);
                Tape::Id l1 = tape.l1_loss(n.reconstruction, n.input);
                Tape::Id vel =
                    tape.velocity_l1_loss(n.reconstruction, n.input, 1.0 / cfg.fps);
                Tape::Id loss = tape.add(l1, tape.scale(vel, cfg.velocity_weight));

                const double loss_value = tape.value(loss).v[0];
                if (!std::isfinite(loss_value))
                    throw Error("train: non-finite loss at epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(start / cfg.batch_size));
                stats.loss += loss_value;
                stats.l1 += tape.value(l1).v[0];
                stats.velocity += tape.value(vel).v[0];
                ++seen;

                tape.backward(loss);
                for (std::size_t p = 0; p < model.params.count(); ++p) {
                    const auto& g = tape.grad(bind[p]).v;
                    for (std::size_t j = 0; j < g.size(); ++j) grads[p].v[j] += g[j];
                }
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : grads)
                for (double& x : g.v) x *= inv;
            adam.step(model.params, grads);
        }
        stats.loss /= static_cast<double>(seen);
        stats.l1 /= static_cast<double>(seen);
        stats.velocity /= static_cast<double>(seen);
        result.curve.push_back(stats);
    }
    return result;
}

double reconstruction_l1(const PAEModel& model, const std::vector<Matrix>& windows) {
    double acc = 0.0;
    for (const auto& w : windows) {
        const Matrix rec = reconstruct_values(model, w);
        double err = 0.0;
        for (std::size_t t = 0; t < w.rows(); ++t)
            for (std::size_t c = 0; c < w.cols(); ++c)
                err += std::fabs(rec(t, c) - w(t, c));
        acc += err / static_cast<double>(w.rows() * w.cols());
    }
    return acc / static_cast<double>(windows.size());
}

SyntheticDataset generate_synthetic(std::size_t count, std::size_t frames,
                                    std::size_t channels, std::uint64_t seed,
                                    double burst_probability) {
    if (count < 1) throw Error("generate_synthetic: count must be >= 1");
    if (frames < 4 || frames % 2 != 0)
        throw Error("generate_synthetic: frames must be even and >= 4");
    Rng rng(seed);
    const std::size_t K = frames / 2;
    const std::size_t atom_count = 8;

    // Fixed per-dataset mixing: which atoms each channel hears, with what
    // gains, plus a constant offset.
    struct Mix {
        std::vector<std::size_t> atoms;
        std::vector<double> gains;
        double offset;
    };
    std::vector<Mix> mixes(channels);
    for (auto& mix : mixes) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 3));
        for (std::size_t i = 0; i < n; ++i) {
            mix.atoms.push_back(
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(atom_count) - 1)));
            double g = rng.uniform(0.4, 1.0);
            if (rng.uniform() < 0.5) g = -g;
            mix.gains.push_back(g);
        }
        mix.offset = rng.uniform(-0.5, 0.5);
    }

    SyntheticDataset ds;
    ds.windows.reserve(count);
    ds.periodic_part.reserve(count);
    ds.burst_part.reserve(count);

    for (std::size_t w = 0; w < count; ++w) {
        // per-window atom pool: bin-aligned sinusoids
        Matrix atoms(frames, atom_count);
        for (std::size_t a = 0; a < atom_count; ++a) {
            const auto bin = static_cast<double>(rng.uniform_int(1, static_cast<long>(K) - 1));
            const double amp = rng.uniform(0.5, 1.5);
            const double phase = rng.uniform(0.0, 1.0);
            for (std::size_t t = 0; t < frames; ++t)
                atoms(t, a) = amp * std::sin(kTwoPi * (bin / static_cast<double>(frames) *
                                                           static_cast<double>(t) -
                                                       phase));
        }

        Matrix periodic(frames, channels);
        for (std::size_t c = 0; c < channels; ++c) {
            const Mix& mix = mixes[c];
            for (std::size_t t = 0; t < frames; ++t) {
                double v = mix.offset;
                for (std::size_t i = 0; i < mix.atoms.size(); ++i)
                    v += mix.gains[i] * atoms(t, mix.atoms[i]);
                periodic(t, c) = v;
            }
        }

        Matrix burst(frames, channels, 0.0);
        const long max_width = std::min<long>(5, static_cast<long>(frames) - 4);
        for (std::size_t c = 0; c < channels; ++c) {
            if (rng.uniform() >= burst_probability || max_width < 2) continue;
            const auto width = static_cast<std::size_t>(rng.uniform_int(2, max_width));
            const auto start = static_cast<std::size_t>(
                rng.uniform_int(2, static_cast<long>(frames - width - 2)));
            double amp = rng.uniform(0.5, 1.5);
            if (rng.uniform() < 0.5) amp = -amp;
            for (std::size_t i = 0; i < width; ++i)
                burst(start + i, c) = amp * std::sin(M_PI * static_cast<double>(i + 1) /
                                                     static_cast<double>(width + 1));
        }

        Matrix window(frames, channels);
        for (std::size_t t = 0; t < frames; ++t)
            for (std::size_t c = 0; c < channels; ++c)
                window(t, c) = periodic(t, c) + burst(t, c);

        ds.windows.push_back(std::move(window));
        ds.periodic_part.push_back(std::move(periodic));
        ds.burst_part.push_back(std::move(burst));
    }
    return ds;
}

PhaseManifold export_phase_manifold(const PAEModel& model,
                                    const std::vector<Matrix>& windows) {
    if (windows.empty()) throw Error("export_phase_manifold: empty dataset");
    const std::size_t N = model.config.latent_channels;
    const std::size_t n = windows.size();

    // per-window 2N-vector of (x, y) points
    Eigen::MatrixXd points(n, 2 * N);
    for (std::size_t w = 0; w < n; ++w) {
        const auto params = window_params(model, windows[w]);
        for (std::size_t c = 0; c < N; ++c) {
            points(static_cast<long>(w), static_cast<long>(2 * c)) =
                params[c].amplitude * std::sin(kTwoPi * params[c].phase);
            points(static_cast<long>(w), static_cast<long>(2 * c + 1)) =
                params[c].amplitude * std::cos(kTwoPi * params[c].phase);
        }
    }

    PhaseManifold out;
    Eigen::MatrixXd projected = Eigen::MatrixXd::Zero(static_cast<long>(n), 2);
    const Eigen::RowVectorXd mean = points.colwise().mean();
    const Eigen::MatrixXd centered = points.rowwise() - mean;
    const Eigen::MatrixXd cov =
        (n > 1) ? Eigen::MatrixXd((centered.transpose() * centered) /
                                  static_cast<double>(n - 1))
                : Eigen::MatrixXd::Zero(static_cast<long>(2 * N), static_cast<long>(2 * N));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double top = eig.eigenvalues().maxCoeff();
    if (n < 2 || top <= 0.0) {
        out.degenerate = true;  // zero-variance warning; projection stays 0
    } else {
        // eigenvalues ascend; take the last two columns
        const long d = eig.eigenvectors().cols();
        Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<long>(2 * N), 2);
        basis.col(0) = eig.eigenvectors().col(d - 1);
        if (d >= 2) basis.col(1) = eig.eigenvectors().col(d - 2);
        projected = centered * basis;
    }

    out.rows = Matrix(n * N, 6);
    std::size_t r = 0;
    for (std::size_t w = 0; w < n; ++w) {
        const auto params = window_params(model, windows[w]);
        for (std::size_t c = 0; c < N; ++c, ++r) {
            out.rows(r, 0) = static_cast<double>(w);
            out.rows(r, 1) = static_cast<double>(c);
            out.rows(r, 2) = params[c].amplitude * std::sin(kTwoPi * params[c].phase);
            out.rows(r, 3) = params[c].amplitude * std::cos(kTwoPi * params[c].phase);
            out.rows(r, 4) = projected(static_cast<long>(w), 0);
            out.rows(r, 5) = projected(static_cast<long>(w), 1);
        }
    }
    return out;
}

namespace {

const char* kConfigKeys[] = {
    "config.latent_channels", "config.window",        "config.input_channels",
    "config.encoder_hidden",  "config.nonperiodic_hidden", "config.conv_width",
    "config.velocity_weight", "config.fps",           "config.learning_rate",
    "config.epochs",          "config.batch_size",    "config.nonperiodic_enabled",
    "config.seed",
};

std::vector<double> config_values(const PAEConfig& c) {
    return {static_cast<double>(c.latent_channels),
            static_cast<double>(c.window),
            static_cast<double>(c.input_channels),
            static_cast<double>(c.encoder_hidden),
            static_cast<double>(c.nonperiodic_hidden),
            static_cast<double>(c.conv_width),
            c.velocity_weight,
            c.fps,
            c.learning_rate,
            static_cast<double>(c.epochs),
            static_cast<double>(c.batch_size),
            c.nonperiodic_enabled ? 1.0 : 0.0,
            static_cast<double>(c.seed)};
}

void apply_config_value(PAEConfig& c, const std::string& key, double v) {
    if (key == "config.latent_channels") c.latent_channels = static_cast<std::size_t>(v);
    else if (key == "config.window") c.window = static_cast<std::size_t>(v);
    else if (key == "config.input_channels") c.input_channels = static_cast<std::size_t>(v);
    else if (key == "config.encoder_hidden") c.encoder_hidden = static_cast<std::size_t>(v);
    else if (key == "config.nonperiodic_hidden")
        c.nonperiodic_hidden = static_cast<std::size_t>(v);
    else if (key == "config.conv_width") c.conv_width = static_cast<std::size_t>(v);
    else if (key == "config.velocity_weight") c.velocity_weight = v;
    else if (key == "config.fps") c.fps = v;
    else if (key == "config.learning_rate") c.learning_rate = v;
    else if (key == "config.epochs") c.epochs = static_cast<std::size_t>(v);
    else if (key == "config.batch_size") c.batch_size = static_cast<std::size_t>(v);
    else if (key == "config.nonperiodic_enabled") c.nonperiodic_enabled = v != 0.0;
    else if (key == "config.seed") c.seed = static_cast<std::uint64_t>(v);
    else throw Error("pae checkpoint: unknown config key " + key);
}

} // namespace

void save_model(const std::string& path, const PAEModel& model) {
    autodiff::ParameterStore store = model.params;
    const auto values = config_values(model.config);
    for (std::size_t i = 0; i < values.size(); ++i)
        store.add(kConfigKeys[i], TensorData::scalar(values[i]));
    autodiff::save_checkpoint(path, store);
}

PAEModel load_model(const std::string& path) {
    autodiff::ParameterStore raw = autodiff::load_checkpoint(path);
    PAEConfig config;
    autodiff::ParameterStore params;
    for (std::size_t i = 0; i < raw.count(); ++i) {
        const auto& e = raw.entry(i);
        if (e.name.rfind("config.", 0) == 0)
            apply_config_value(config, e.name, e.value.v[0]);
        else
            params.add(e.name, e.value);
    }
    PAEModel model = create_model(config);
    for (std::size_t i = 0; i < model.params.count(); ++i) {
        auto& entry = model.params.entry(i);
        const std::size_t src = params.index_of(entry.name);
        if (params.value(src).shape != entry.value.shape)
            throw Error("pae checkpoint: shape mismatch for " + entry.name);
        entry.value = params.value(src);
    }
    return model;
}

} // namespace gesturelab::pae
