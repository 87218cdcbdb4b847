#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gesturelab/autodiff/tensor.hpp"

namespace gesturelab::autodiff {

// Reverse-mode tape. Operations execute eagerly and record a backward
// closure; ids only ever reference earlier nodes, so the push order is a
// topological order and backward() is a single reverse sweep.
//
// A tape belongs to one training step at a time; separate tapes may run in
// parallel.
class Tape {
public:
    using Id = std::int32_t;

    Id input(TensorData value, bool requires_grad = false);

    // elementwise / structural
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    Id scale(Id a, double c);
    Id scale_by(Id a, Id scalar);  // broadcast multiply by a shape-{1} node
    Id add_all(const std::vector<Id>& terms);
    Id concat1d(const std::vector<Id>& parts);
    Id concat_cols(Id a, Id b);
    Id row(Id a, std::size_t r);
    Id col(Id a, std::size_t c);
    Id stack_rows(const std::vector<Id>& rows);
    Id stack_scalars(const std::vector<Id>& xs);
    Id element(Id a, std::size_t flat_index);

    // nonlinearities
    Id tanh_op(Id a);
    Id sigmoid_op(Id a);
    Id softmax_op(Id a);                 // 1-D
    Id atan2_cycles(Id y, Id x);         // elementwise, wrapped to [0,1)

    // layers
    Id dense(Id input, Id weights, Id bias);  // 1-D vector or 2-D row-wise
    Id conv1d(Id input, Id kernels, Id bias, int stride, int pad_left,
              int pad_right, int dilation);
    Id channel_norm(Id input, double eps = 1e-5);  // T x C, per channel

    // periodic parameterization (amplitude/frequency/offset per channel)
    struct FftOut {
        Id amplitude;
        Id frequency;
        Id offset;
    };
    FftOut fft_params(Id latent);  // T x N -> three N-vectors
    Id periodic_reconstruct(Id amplitude, Id frequency, Id offset, Id phase,
                            std::size_t frames);  // -> T x N

    // losses (scalar outputs)
    Id l1_loss(Id x, Id y);
    Id mse_loss(Id x, Id y);
    Id velocity_l1_loss(Id x, Id y, double dt);  // 2-D, differences along rows
    Id sq_loss_const(Id pred, std::vector<double> target, std::vector<double> mask);
    Id circular_sq_loss_const(Id pred, std::vector<double> target,
                              std::vector<double> mask);

    // Seeds the root gradient with 1 and sweeps the tape once in reverse.
    void backward(Id root);

    const TensorData& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const TensorData& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    bool requires_grad(Id id) const {
        return nodes_[static_cast<std::size_t>(id)].requires_grad;
    }
    std::size_t node_count() const { return nodes_.size(); }

    TensorData& grad_ref(Id id) { return nodes_[static_cast<std::size_t>(id)].grad; }

private:
    struct Node {
        TensorData value;
        TensorData grad;
        bool requires_grad = false;
        std::function<void(Tape&, Id)> backward;
    };

    std::vector<Node> nodes_;

    Id push(TensorData value, bool requires_grad, std::function<void(Tape&, Id)> fn);
    bool any_requires(const std::vector<Id>& ids) const;
};

} // namespace gesturelab::autodiff
