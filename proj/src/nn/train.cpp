#include "sct/nn/train.hpp"

#include <algorithm>
#include <numeric>

#include "sct/core/rng.hpp"
#include "sct/nn/layers.hpp"

namespace sct::nn {

Tensor regression_input(const Tensor& mr, const Tensor& mask) { return concat_channels(mr, mask); }

Tensor stack_batch(const std::vector<const Tensor*>& items) {
    if (items.empty()) throw ShapeError("stack_batch: no items");
    auto shape = items.front()->shape();
    if (shape.empty() || shape[0] != 1) throw ShapeError("stack_batch: items must have a leading extent of 1");
    shape[0] = static_cast<int>(items.size());
    Tensor out(shape);
    const std::size_t per = items.front()->size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i]->shape() != items.front()->shape()) throw ShapeError("stack_batch: ragged items");
        std::copy_n(items[i]->data(), per, out.data() + i * per);
    }
    return out;
}

namespace {

// Endless sequence of seeded epoch permutations over [0, n).
class EpochSampler {
public:
    EpochSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        pos_ = order_.size();
    }

    std::size_t next() {
        if (pos_ == order_.size()) {
            rng_.shuffle(order_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    std::vector<std::size_t> order_;
    Rng rng_;
    std::size_t pos_;
};

std::span<const double> item_view(const Tensor& batch, std::size_t i) {
    const std::size_t per = batch.size() / static_cast<std::size_t>(batch.dim(0));
    return batch.values().subspan(i * per, per);
}

}  // namespace

TrainResult train_loop(ModelParams seg, ModelParams reg, const TrainingSet& data, const TrainConfig& cfg,
                       std::ostream* log_jsonl) {
    cfg.loss.validate();
    if (cfg.batch < 1) throw ModelError("train_loop: batch must be positive");
    TrainResult result{std::move(seg), std::move(reg), {}};
    if (cfg.steps == 0) return result;
    if (data.segmentation.empty() || data.regression.empty()) throw ModelError("train_loop: empty dataset");
    if (result.reg.desc.in_channels != result.seg.desc.in_channels + 1)
        throw ModelError("train_loop: regression model must take the MR channels plus one mask channel");

    OptimState seg_opt = make_optimizer(result.seg, cfg.adam);
    OptimState reg_opt = make_optimizer(result.reg, cfg.adam);
    EpochSampler seg_order(data.segmentation.size(), derive_seed(cfg.seed, 1));
    EpochSampler reg_order(data.regression.size(), derive_seed(cfg.seed, 2));
    const std::size_t b = cfg.batch;
    const double inv_b = 1.0 / static_cast<double>(b);

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        std::vector<const TrainingSample*> seg_items, reg_items;
        for (std::size_t i = 0; i < b; ++i) {
            seg_items.push_back(&data.segmentation[seg_order.next()]);
            reg_items.push_back(&data.regression[reg_order.next()]);
        }
        std::vector<const Tensor*> seg_in, reg_mr, reg_mask;
        for (std::size_t i = 0; i < b; ++i) {
            seg_in.push_back(&seg_items[i]->input);
            reg_mr.push_back(&reg_items[i]->input);
            reg_mask.push_back(&reg_items[i]->mask);
        }
        const Tensor x_seg = stack_batch(seg_in);
        const Tensor x_reg = regression_input(stack_batch(reg_mr), stack_batch(reg_mask));

        ForwardCache seg_cache, reg_cache;
        const ModelOutput seg_out = forward(result.seg, x_seg, &seg_cache);
        const ModelOutput reg_out = forward(result.reg, x_reg, &reg_cache);

        Tensor dseg = seg_out.seg.zeros_like();
        Tensor dreg = reg_out.reg.zeros_like();
        loss::LossParts parts;
        const std::size_t per = dseg.size() / b;
        for (std::size_t i = 0; i < b; ++i) {
            const auto item = loss::combined_loss(item_view(seg_out.seg, i), seg_items[i]->mask.values(),
                                                  item_view(reg_out.reg, i), reg_items[i]->ct.values(),
                                                  reg_items[i]->skull, cfg.loss);
            parts.total += item.parts.total * inv_b;
            parts.dice += item.parts.dice * inv_b;
            parts.bce += item.parts.bce * inv_b;
            parts.mse += item.parts.mse * inv_b;
            for (std::size_t k = 0; k < per; ++k) {
                dseg[i * per + k] = item.grad_seg[k] * inv_b;
                dreg[i * per + k] = item.grad_reg[k] * inv_b;
            }
        }

        // Each pipeline only receives the gradient of its own head.
        const Tensor zero = dseg.zeros_like();
        const auto seg_grads = backward(result.seg, seg_cache, dseg, zero);
        const auto reg_grads = backward(result.reg, reg_cache, zero, dreg);
        optimizer_step(result.seg, seg_grads.grads, seg_opt);
        optimizer_step(result.reg, reg_grads.grads, reg_opt);

        result.log.push_back(parts);
        if (log_jsonl) *log_jsonl << loss::log_record(step, parts, cfg.loss).dump() << '\n';
    }
    return result;
}

}  // namespace sct::nn
