#pragma once

#include <string>
#include <vector>

#include "gesturelab/autodiff/tape.hpp"
#include "gesturelab/core/rng.hpp"

namespace gesturelab::autodiff {

// Named parameter arrays in a stable order. Models hold indices into this
// store; a TapeBinding inserts every parameter into a tape at the start of
// each step.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        TensorData value;
    };

    std::size_t add(const std::string& name, TensorData value);
    std::size_t index_of(const std::string& name) const;  // throws when absent
    bool contains(const std::string& name) const;

    std::size_t count() const { return entries_.size(); }
    Entry& entry(std::size_t i) { return entries_[i]; }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    TensorData& value(std::size_t i) { return entries_[i].value; }
    const TensorData& value(std::size_t i) const { return entries_[i].value; }

private:
    std::vector<Entry> entries_;
};

// Inserts all parameters of a store into a tape (requires_grad = true) and
// maps store indices to tape ids.
class TapeBinding {
public:
    TapeBinding(Tape& tape, const ParameterStore& store);
    // Adopts existing tape ids in store order (used by gradient checks).
    explicit TapeBinding(std::vector<Tape::Id> ids) : ids_(std::move(ids)) {}
    Tape::Id operator[](std::size_t store_index) const { return ids_[store_index]; }

private:
    std::vector<Tape::Id> ids_;
};

// Collects parameter gradients after backward(), aligned with the store.
std::vector<TensorData> collect_gradients(const Tape& tape, const TapeBinding& binding,
                                          const ParameterStore& store);

// Weights uniform in +-1/sqrt(fan_in), biases zero.
TensorData init_uniform(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in);

struct DenseLayer {
    std::size_t weights = 0, bias = 0;  // store indices
    std::size_t in_dim = 0, out_dim = 0;

    static DenseLayer create(ParameterStore& store, Rng& rng, const std::string& name,
                             std::size_t in_dim, std::size_t out_dim);
    Tape::Id apply(Tape& tape, const TapeBinding& bind, Tape::Id x) const;
};

struct Conv1dLayer {
    std::size_t kernels = 0, bias = 0;
    std::size_t in_channels = 0, out_channels = 0, width = 0;
    int stride = 1, pad_left = 0, pad_right = 0, dilation = 1;

    // Symmetric padding keeping T for odd widths at stride 1.
    static Conv1dLayer create_same(ParameterStore& store, Rng& rng,
                                   const std::string& name, std::size_t in_channels,
                                   std::size_t out_channels, std::size_t width);
    // Left padding only: output at frame t sees frames <= t.
    static Conv1dLayer create_causal(ParameterStore& store, Rng& rng,
                                     const std::string& name, std::size_t in_channels,
                                     std::size_t out_channels, std::size_t width,
                                     int dilation);
    Tape::Id apply(Tape& tape, const TapeBinding& bind, Tape::Id x) const;
};

// Minimal gated cell: f = sigmoid(Wf [x;h] + bf), c = tanh(Wh [x; f*h] + bh),
// h' = (1-f)*h + f*c.
struct RecurrentCell {
    std::size_t wf = 0, bf = 0, wh = 0, bh = 0;
    std::size_t input_dim = 0, state_dim = 0;

    static RecurrentCell create(ParameterStore& store, Rng& rng, const std::string& name,
                                std::size_t input_dim, std::size_t state_dim);
    Tape::Id step(Tape& tape, const TapeBinding& bind, Tape::Id x, Tape::Id h) const;
    // Runs over a T x input_dim sequence from a zero state; returns
    // T x state_dim. reverse=true scans the sequence backwards but keeps
    // output rows in input order.
    Tape::Id run(Tape& tape, const TapeBinding& bind, Tape::Id sequence,
                 bool reverse = false) const;
};

} // namespace gesturelab::autodiff
