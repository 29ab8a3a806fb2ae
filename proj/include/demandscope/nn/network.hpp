#pragma once

#include <cstring>
#include <vector>

#include "demandscope/nn/layers.hpp"
#include "demandscope/nn/params.hpp"
#include "demandscope/nn/spec.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::nn {

struct FwdContext {
    bool train = false;
    uint64_t dropout_key = 0;  // vary per optimizer step so masks differ
};

template <typename T>
struct Activations {
    Tensor<T> input;
    std::vector<Tensor<T>> acts;  // acts[i] = output of layer i, batch-major
};

inline std::vector<int> with_batch(int n, const ActShape& s) {
    std::vector<int> out{n};
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

// Runs a NetworkSpec layer by layer. Spatial layers loop over the batch,
// flat layers run batched. All results are independent of thread count.
template <typename T>
class Network {
  public:
    explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
        shapes_ = infer_shapes(spec_);
        param_index_.assign(spec_.layers.size(), -1);
        int idx = 0;
        for (size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerKind k = spec_.layers[i].kind;
            if (k == LayerKind::Conv2d || k == LayerKind::Dense) {
                param_index_[i] = idx;
                idx += 2;  // weight, bias
            }
        }
        n_param_arrays_ = idx;
    }

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<ActShape>& output_shapes() const { return shapes_; }
    const ActShape& output_shape() const { return shapes_.back(); }
    int n_param_arrays() const { return n_param_arrays_; }

    ParameterStore<T> init(uint64_t seed) const { return init_params<T>(spec_, seed); }

    Activations<T> forward(Tensor<T> x, const ParameterStore<T>& ps,
                           const FwdContext& ctx = {}) const {
        check_store(ps);
        const int n = batch_of(x);
        Activations<T> out;
        out.input = std::move(x);
        out.acts.resize(spec_.layers.size());
        const Tensor<T>* cur = &out.input;
        ConvScratch scratch;
        for (size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerDesc& l = spec_.layers[i];
            const ActShape in_s = i == 0 ? spec_.input : shapes_[i - 1];
            Tensor<T>& y = out.acts[i];
            y = Tensor<T>(with_batch(n, shapes_[i]));
            const int64_t in_per = per_sample(in_s);
            switch (l.kind) {
                case LayerKind::Conv2d: {
                    const auto& w = ps.arrays[param_index_[i]].w;
                    const auto& b = ps.arrays[param_index_[i] + 1].w;
                    const int64_t out_per = per_sample(shapes_[i]);
                    for (int s = 0; s < n; ++s)
                        conv2d_forward(cur->v.data() + s * in_per, in_s[0], in_s[1], in_s[2],
                                       w.data(), b.data(), l.out_ch, l.kernel,
                                       y.v.data() + s * out_per, scratch);
                    break;
                }
                case LayerKind::Relu:
                    relu_forward(cur->v.data(), cur->size(), y.v.data());
                    break;
                case LayerKind::Sigmoid:
                    sigmoid_forward(cur->v.data(), cur->size(), y.v.data());
                    break;
                case LayerKind::MaxPool2:
                    for (int s = 0; s < n; ++s)
                        maxpool2_forward(cur->v.data() + s * in_per, in_s[0], in_s[1], in_s[2],
                                         y.v.data() + s * per_sample(shapes_[i]));
                    break;
                case LayerKind::UpsampleNearest2:
                    for (int s = 0; s < n; ++s)
                        upsample2_forward(cur->v.data() + s * in_per, in_s[0], in_s[1], in_s[2],
                                          y.v.data() + s * per_sample(shapes_[i]));
                    break;
                case LayerKind::GlobalMaxPool:
                    for (int s = 0; s < n; ++s)
                        global_maxpool_forward(cur->v.data() + s * in_per, in_s[0],
                                               in_s[1] * in_s[2], y.v.data() + s * in_s[0]);
                    break;
                case LayerKind::Dense: {
                    const auto& w = ps.arrays[param_index_[i]].w;
                    const auto& b = ps.arrays[param_index_[i] + 1].w;
                    dense_forward(cur->v.data(), n, l.in_dim, w.data(), b.data(), l.out_dim,
                                  y.v.data());
                    break;
                }
                case LayerKind::Dropout:
                    dropout_forward(cur->v.data(), cur->size(), l.rate,
                                    derive_seed(ctx.dropout_key, 0xd407u, i), ctx.train,
                                    y.v.data());
                    break;
                case LayerKind::Softmax:
                    softmax_forward(cur->v.data(), n, in_s[0], y.v.data());
                    break;
            }
            cur = &y;
        }
        return out;
    }

    // Backpropagates dout (gradient w.r.t. the output of layer `from`, default
    // last) down to layer `to` exclusive: the return value is the gradient
    // w.r.t. the output of layer `to`, or w.r.t. the network input when
    // to == -1. grads may be null to skip parameter gradients. The input
    // gradient is only materialized when need_input_grad is set.
    Tensor<T> backward(const Activations<T>& acts, Tensor<T> dout, const ParameterStore<T>& ps,
                       Gradients<T>* grads, const FwdContext& ctx = {}, int from = -1,
                       int to = -1, bool need_input_grad = false) const {
        check_store(ps);
        if (from < 0) from = static_cast<int>(spec_.layers.size()) - 1;
        const int n = batch_of(acts.input);
        Tensor<T> dy = std::move(dout);
        ConvScratch scratch;
        for (int i = from; i > to; --i) {
            const LayerDesc& l = spec_.layers[i];
            const ActShape in_s = i == 0 ? spec_.input : shapes_[i - 1];
            const Tensor<T>& x_in = i == 0 ? acts.input : acts.acts[i - 1];
            const Tensor<T>& y = acts.acts[i];
            const bool want_dx = i > to + 1 || to >= 0 || need_input_grad;
            Tensor<T> dx;
            if (want_dx) dx = Tensor<T>(with_batch(n, i == 0 ? spec_.input : shapes_[i - 1]));
            const int64_t in_per = per_sample(in_s);
            switch (l.kind) {
                case LayerKind::Conv2d: {
                    const auto& w = ps.arrays[param_index_[i]].w;
                    T* dw = grads ? grads->g[param_index_[i]].data() : nullptr;
                    T* db = grads ? grads->g[param_index_[i] + 1].data() : nullptr;
                    const int64_t out_per = per_sample(shapes_[i]);
                    std::vector<T> dw_skip, db_skip;
                    if (!dw) {
                        dw_skip.assign(w.size(), T(0));
                        db_skip.assign(static_cast<size_t>(l.out_ch), T(0));
                        dw = dw_skip.data();
                        db = db_skip.data();
                    }
                    for (int s = 0; s < n; ++s)
                        conv2d_backward(x_in.v.data() + s * in_per, dy.v.data() + s * out_per,
                                        in_s[0], in_s[1], in_s[2], w.data(), l.out_ch, l.kernel,
                                        dw, db, want_dx ? dx.v.data() + s * in_per : nullptr,
                                        scratch);
                    break;
                }
                case LayerKind::Relu:
                    relu_backward(y.v.data(), dy.v.data(), y.size(), dx.v.data());
                    break;
                case LayerKind::Sigmoid:
                    sigmoid_backward(y.v.data(), dy.v.data(), y.size(), dx.v.data());
                    break;
                case LayerKind::MaxPool2:
                    for (int s = 0; s < n; ++s)
                        maxpool2_backward(x_in.v.data() + s * in_per,
                                          y.v.data() + s * per_sample(shapes_[i]),
                                          dy.v.data() + s * per_sample(shapes_[i]), in_s[0],
                                          in_s[1], in_s[2], dx.v.data() + s * in_per);
                    break;
                case LayerKind::UpsampleNearest2:
                    for (int s = 0; s < n; ++s)
                        upsample2_backward(dy.v.data() + s * per_sample(shapes_[i]), in_s[0],
                                           in_s[1], in_s[2], dx.v.data() + s * in_per);
                    break;
                case LayerKind::GlobalMaxPool:
                    for (int s = 0; s < n; ++s)
                        global_maxpool_backward(x_in.v.data() + s * in_per,
                                                y.v.data() + s * in_s[0],
                                                dy.v.data() + s * in_s[0], in_s[0],
                                                in_s[1] * in_s[2], dx.v.data() + s * in_per);
                    break;
                case LayerKind::Dense: {
                    const auto& w = ps.arrays[param_index_[i]].w;
                    std::vector<T> dw_skip, db_skip;
                    T* dw = grads ? grads->g[param_index_[i]].data() : nullptr;
                    T* db = grads ? grads->g[param_index_[i] + 1].data() : nullptr;
                    if (!dw) {
                        dw_skip.assign(w.size(), T(0));
                        db_skip.assign(static_cast<size_t>(l.out_dim), T(0));
                        dw = dw_skip.data();
                        db = db_skip.data();
                    }
                    dense_backward(x_in.v.data(), dy.v.data(), n, l.in_dim, w.data(), l.out_dim,
                                   dw, db, want_dx ? dx.v.data() : nullptr);
                    break;
                }
                case LayerKind::Dropout:
                    dropout_backward(dy.v.data(), dy.size(), l.rate,
                                     derive_seed(ctx.dropout_key, 0xd407u, static_cast<size_t>(i)),
                                     ctx.train, dx.v.data());
                    break;
                case LayerKind::Softmax:
                    softmax_backward(y.v.data(), dy.v.data(), n, in_s[0], dx.v.data());
                    break;
            }
            if (!want_dx) return {};
            dy = std::move(dx);
        }
        return dy;
    }

  private:
    static int64_t per_sample(const ActShape& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }
    static int batch_of(const Tensor<T>& t) {
        if (t.shape.empty()) throw ShapeMismatch("batch tensor has no dims");
        return t.shape[0];
    }
    void check_store(const ParameterStore<T>& ps) const {
        if (static_cast<int>(ps.arrays.size()) != n_param_arrays_)
            throw ShapeMismatch("parameter store has " + std::to_string(ps.arrays.size()) +
                                " arrays, network needs " + std::to_string(n_param_arrays_));
    }

    NetworkSpec spec_;
    std::vector<ActShape> shapes_;
    std::vector<int> param_index_;
    int n_param_arrays_ = 0;
};

}  // namespace demandscope::nn
