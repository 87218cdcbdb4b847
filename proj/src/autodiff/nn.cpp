#include "gesturelab/autodiff/nn.hpp"

#include <cmath>

#include "gesturelab/core/error.hpp"

namespace gesturelab::autodiff {

std::size_t ParameterStore::add(const std::string& name, TensorData value) {
    if (contains(name)) throw Error("parameter already exists: " + name);
    entries_.push_back({name, std::move(value)});
    return entries_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw Error("unknown parameter: " + name);
}

bool ParameterStore::contains(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

TapeBinding::TapeBinding(Tape& tape, const ParameterStore& store) {
    ids_.reserve(store.count());
    for (std::size_t i = 0; i < store.count(); ++i)
        ids_.push_back(tape.input(store.value(i), true));
}

std::vector<TensorData> collect_gradients(const Tape& tape, const TapeBinding& binding,
                                          const ParameterStore& store) {
    std::vector<TensorData> grads;
    grads.reserve(store.count());
    for (std::size_t i = 0; i < store.count(); ++i) grads.push_back(tape.grad(binding[i]));
    return grads;
}

TensorData init_uniform(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    TensorData t = TensorData::zeros(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : t.v) x = rng.uniform(-bound, bound);
    return t;
}

DenseLayer DenseLayer::create(ParameterStore& store, Rng& rng, const std::string& name,
                              std::size_t in_dim, std::size_t out_dim) {
    DenseLayer l;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.weights = store.add(name + ".w", init_uniform(rng, {out_dim, in_dim}, in_dim));
    l.bias = store.add(name + ".b", TensorData::zeros({out_dim}));
    return l;
}

Tape::Id DenseLayer::apply(Tape& tape, const TapeBinding& bind, Tape::Id x) const {
    return tape.dense(x, bind[weights], bind[bias]);
}

Conv1dLayer Conv1dLayer::create_same(ParameterStore& store, Rng& rng,
                                     const std::string& name, std::size_t in_channels,
                                     std::size_t out_channels, std::size_t width) {
    if (width % 2 == 0) throw Error("create_same: width must be odd");
    Conv1dLayer l;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    l.width = width;
    l.pad_left = l.pad_right = static_cast<int>(width / 2);
    l.kernels = store.add(name + ".k", init_uniform(rng, {out_channels, in_channels, width},
                                                    in_channels * width));
    l.bias = store.add(name + ".b", TensorData::zeros({out_channels}));
    return l;
}

Conv1dLayer Conv1dLayer::create_causal(ParameterStore& store, Rng& rng,
                                       const std::string& name, std::size_t in_channels,
                                       std::size_t out_channels, std::size_t width,
                                       int dilation) {
    Conv1dLayer l;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    l.width = width;
    l.dilation = dilation;
    l.pad_left = dilation * (static_cast<int>(width) - 1);
    l.pad_right = 0;
    l.kernels = store.add(name + ".k", init_uniform(rng, {out_channels, in_channels, width},
                                                    in_channels * width));
    l.bias = store.add(name + ".b", TensorData::zeros({out_channels}));
    return l;
}

Tape::Id Conv1dLayer::apply(Tape& tape, const TapeBinding& bind, Tape::Id x) const {
    return tape.conv1d(x, bind[kernels], bind[bias], stride, pad_left, pad_right,
                       dilation);
}

RecurrentCell RecurrentCell::create(ParameterStore& store, Rng& rng,
                                    const std::string& name, std::size_t input_dim,
                                    std::size_t state_dim) {
    RecurrentCell c;
    c.input_dim = input_dim;
    c.state_dim = state_dim;
    const std::size_t joint = input_dim + state_dim;
    c.wf = store.add(name + ".wf", init_uniform(rng, {state_dim, joint}, joint));
    c.bf = store.add(name + ".bf", TensorData::zeros({state_dim}));
    c.wh = store.add(name + ".wh", init_uniform(rng, {state_dim, joint}, joint));
    c.bh = store.add(name + ".bh", TensorData::zeros({state_dim}));
    return c;
}

Tape::Id RecurrentCell::step(Tape& tape, const TapeBinding& bind, Tape::Id x,
                             Tape::Id h) const {
    Tape::Id xh = tape.concat1d({x, h});
    Tape::Id f = tape.sigmoid_op(tape.dense(xh, bind[wf], bind[bf]));
    Tape::Id gated = tape.mul(f, h);
    Tape::Id xg = tape.concat1d({x, gated});
    Tape::Id cand = tape.tanh_op(tape.dense(xg, bind[wh], bind[bh]));
    // h' = h + f * (cand - h)
    return tape.add(h, tape.mul(f, tape.sub(cand, h)));
}

Tape::Id RecurrentCell::run(Tape& tape, const TapeBinding& bind, Tape::Id sequence,
                            bool reverse) const {
    const std::size_t T = tape.value(sequence).dim(0);
    Tape::Id h = tape.input(TensorData::zeros({state_dim}), false);
    std::vector<Tape::Id> outputs(T);
    for (std::size_t i = 0; i < T; ++i) {
        const std::size_t t = reverse ? T - 1 - i : i;
        h = step(tape, bind, tape.row(sequence, t), h);
        outputs[t] = h;
    }
    return tape.stack_rows(outputs);
}

} // namespace gesturelab::autodiff
