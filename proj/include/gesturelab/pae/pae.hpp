#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gesturelab/autodiff/adam.hpp"
#include "gesturelab/autodiff/nn.hpp"
#include "gesturelab/autodiff/tape.hpp"
#include "gesturelab/core/matrix.hpp"
#include "gesturelab/spectrum/spectrum.hpp"

namespace gesturelab::pae {

struct PAEConfig {
    std::size_t latent_channels = 10;  // N
    std::size_t window = 34;           // T, must be even
    std::size_t input_channels = 141;
    std::size_t encoder_hidden = 64;
    std::size_t nonperiodic_hidden = 16;
    std::size_t conv_width = 5;
    double velocity_weight = 1.0;  // lambda_u
    double fps = 15.0;
    double learning_rate = 5.0e-4;
    std::size_t epochs = 100;
    std::size_t batch_size = 16;
    bool nonperiodic_enabled = true;
    std::uint64_t seed = 0;
};

// Encoder -> {periodic branch, non-periodic branch} -> decoder.
struct PAEModel {
    PAEConfig config;
    autodiff::ParameterStore params;
    autodiff::Conv1dLayer enc1, enc2;
    std::vector<autodiff::DenseLayer> phase_heads;  // per latent channel, T -> (sx, sy)
    autodiff::Conv1dLayer np1, np2;
    autodiff::Conv1dLayer dec;
};

PAEModel create_model(const PAEConfig& config);

// --- tape-side graph builders -------------------------------------------

autodiff::Tape::Id encode(autodiff::Tape& tape, const autodiff::TapeBinding& bind,
                          const PAEModel& model, autodiff::Tape::Id input);

struct PeriodicNodes {
    autodiff::Tape::Id amplitude, frequency, offset, phase;  // N-vectors
    autodiff::Tape::Id reconstruction;                       // T x N
};
PeriodicNodes periodic_branch(autodiff::Tape& tape, const autodiff::TapeBinding& bind,
                              const PAEModel& model, autodiff::Tape::Id latent);

// All-zero constant when the branch is disabled (ablation).
autodiff::Tape::Id nonperiodic_branch(autodiff::Tape& tape,
                                      const autodiff::TapeBinding& bind,
                                      const PAEModel& model, autodiff::Tape::Id latent);

autodiff::Tape::Id decode(autodiff::Tape& tape, const autodiff::TapeBinding& bind,
                          const PAEModel& model, autodiff::Tape::Id periodic,
                          autodiff::Tape::Id nonperiodic);

// L1(target, prediction) + lambda_u * velocity L1 with dt = 1/fps.
autodiff::Tape::Id reconstruction_loss(autodiff::Tape& tape, autodiff::Tape::Id target,
                                       autodiff::Tape::Id prediction,
                                       double velocity_weight, double fps);

// --- value-level inference ------------------------------------------------

Matrix encode_values(const PAEModel& model, const Matrix& window);
Matrix reconstruct_values(const PAEModel& model, const Matrix& window);

// Periodic parameters of one window through the learned pathway
// (A, F, B analytic from the latent; S from the phase heads).
std::vector<spectrum::PeriodicParams> window_params(const PAEModel& model,
                                                    const Matrix& window);

// Sets the phase-head weights so each head reproduces the analytic
// least-squares phase of its channel at that latent's dominant frequency.
void seed_phase_heads(PAEModel& model, const Matrix& latent);

// --- training --------------------------------------------------------------

struct EpochStats {
    double loss = 0.0, l1 = 0.0, velocity = 0.0;
};
struct TrainResult {
    std::vector<EpochStats> curve;
};
TrainResult train(PAEModel& model, const std::vector<Matrix>& windows);

// Mean reconstruction L1 over a set of windows (evaluation only).
double reconstruction_l1(const PAEModel& model, const std::vector<Matrix>& windows);

// --- synthetic data ---------------------------------------------------------

// Each channel is a short mixture of bin-aligned sinusoids (drawn from a
// small shared atom pool so the set is low-rank, like real motion) plus a
// constant offset; sparse half-sine bursts form the non-periodic part.
struct SyntheticDataset {
    std::vector<Matrix> windows;
    std::vector<Matrix> periodic_part;
    std::vector<Matrix> burst_part;
};
SyntheticDataset generate_synthetic(std::size_t count, std::size_t frames,
                                    std::size_t channels, std::uint64_t seed,
                                    double burst_probability = 0.3);

// --- phase manifold ----------------------------------------------------------

struct PhaseManifold {
    // columns: window, channel, x, y, pca_x, pca_y
    Matrix rows;
    bool degenerate = false;  // zero-variance PCA (e.g. a single window)
};
PhaseManifold export_phase_manifold(const PAEModel& model,
                                    const std::vector<Matrix>& windows);

// --- persistence -------------------------------------------------------------

void save_model(const std::string& path, const PAEModel& model);
PAEModel load_model(const std::string& path);

} // namespace gesturelab::pae
