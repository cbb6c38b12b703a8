#include "sct/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "sct/core/rng.hpp"
#include "sct/nn/model.hpp"

namespace sct::harness {

void ExperimentConfig::validate() const {
    if (modalities != std::vector<std::string>{"mr1"} && modalities != std::vector<std::string>{"mr1", "mr2"})
        throw HarnessError("config: modalities must be [\"mr1\"] or [\"mr1\", \"mr2\"]");
    if (subjects < 3) throw HarnessError("config: need at least 3 subjects");
    for (double r : split_ratios)
        if (r < 0.0) throw HarnessError("config: split ratios must be non-negative");
    if (std::abs(split_ratios[0] + split_ratios[1] + split_ratios[2] - 1.0) > 1e-9)
        throw HarnessError("config: split ratios must sum to 1");
    if (patch < 1 || patch > dims.z || patch > dims.y || patch > dims.x)
        throw HarnessError("config: patch must fit inside the volume");
    if (step < 1) throw HarnessError("config: step must be >= 1");
    if (patches_per_subject < 1) throw HarnessError("config: patches_per_subject must be >= 1");
    for (double f : {skull_fraction_seg, skull_fraction_reg})
        if (!(f >= 0.0 && f <= 1.0)) throw HarnessError("config: skull fractions must lie in [0, 1]");
    if (!(mask_threshold > 0.0 && mask_threshold < 1.0)) throw HarnessError("config: mask_threshold must lie in (0, 1)");
    if (batch < 1) throw HarnessError("config: batch must be >= 1");
    if (!(adam.lr > 0.0)) throw HarnessError("config: learning rate must be positive");
    if (workers < 1) throw HarnessError("config: workers must be >= 1");
    phantom_spec(0).validate();
    try {
        loss.validate();
        nn::ModelDescriptor d;
        d.in_channels = in_channels();
        d.widths = widths;
        d.heads = heads;
        d.embed_dim = embed_dim;
        d.patch = patch;
        d.validate();
    } catch (const std::exception& e) {
        throw HarnessError(std::string("config: ") + e.what());
    }
}

PhantomSpec ExperimentConfig::phantom_spec(std::size_t subject_index) const {
    PhantomSpec s;
    s.dims = dims;
    s.seed = derive_seed(derive_seed(seed, 100), subject_index);
    s.shell_thickness = shell_thickness;
    s.noise_mr1 = noise_mr1;
    s.noise_mr2 = noise_mr2;
    return s;
}

std::string subject_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sub-%02zu", index + 1);
    return buf;
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["modalities"] = c.modalities;
    j["subjects"] = c.subjects;
    j["dims"] = {c.dims.z, c.dims.y, c.dims.x};
    j["shell_thickness"] = c.shell_thickness;
    j["noise_mr1"] = c.noise_mr1;
    j["noise_mr2"] = c.noise_mr2;
    j["split_ratios"] = c.split_ratios;
    j["patch"] = c.patch;
    j["step"] = c.step;
    j["patches_per_subject"] = c.patches_per_subject;
    j["skull_fraction_seg"] = c.skull_fraction_seg;
    j["skull_fraction_reg"] = c.skull_fraction_reg;
    j["widths"] = c.widths;
    j["heads"] = c.heads;
    j["embed_dim"] = c.embed_dim;
    j["loss"] = {{"lambda", c.loss.lambda},
                 {"dilation_d", c.loss.dilation_d},
                 {"connectivity", static_cast<int>(c.loss.connectivity)},
                 {"bce_clamp_eps", c.loss.bce_clamp_eps},
                 {"dice_smooth_eps", c.loss.dice_smooth_eps}};
    j["adam"] = {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}};
    j["steps"] = c.steps;
    j["batch"] = c.batch;
    j["mask_threshold"] = c.mask_threshold;
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    return j;
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out, std::set<std::string>& seen) {
    if (!j.contains(key)) return;
    seen.insert(key);
    j.at(key).get_to(out);
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base) {
    if (!j.is_object()) throw HarnessError("config: expected a JSON object");
    ExperimentConfig c = base;
    std::set<std::string> seen;
    try {
        take(j, "modalities", c.modalities, seen);
        take(j, "subjects", c.subjects, seen);
        if (j.contains("dims")) {
            seen.insert("dims");
            const auto d = j.at("dims").get<std::vector<std::int64_t>>();
            if (d.size() != 3) throw HarnessError("config: dims must have three entries");
            c.dims = {d[0], d[1], d[2]};
        }
        take(j, "shell_thickness", c.shell_thickness, seen);
        take(j, "noise_mr1", c.noise_mr1, seen);
        take(j, "noise_mr2", c.noise_mr2, seen);
        take(j, "split_ratios", c.split_ratios, seen);
        take(j, "patch", c.patch, seen);
        take(j, "step", c.step, seen);
        take(j, "patches_per_subject", c.patches_per_subject, seen);
        take(j, "skull_fraction_seg", c.skull_fraction_seg, seen);
        take(j, "skull_fraction_reg", c.skull_fraction_reg, seen);
        take(j, "widths", c.widths, seen);
        take(j, "heads", c.heads, seen);
        take(j, "embed_dim", c.embed_dim, seen);
        if (j.contains("loss")) {
            seen.insert("loss");
            const auto& l = j.at("loss");
            std::set<std::string> inner;
            take(l, "lambda", c.loss.lambda, inner);
            take(l, "dilation_d", c.loss.dilation_d, inner);
            if (l.contains("connectivity")) {
                inner.insert("connectivity");
                c.loss.connectivity = connectivity_from_int(l.at("connectivity").get<int>());
            }
            take(l, "bce_clamp_eps", c.loss.bce_clamp_eps, inner);
            take(l, "dice_smooth_eps", c.loss.dice_smooth_eps, inner);
            for (const auto& [k, v] : l.items())
                if (!inner.count(k)) throw HarnessError("config: unknown key loss." + k);
        }
        if (j.contains("adam")) {
            seen.insert("adam");
            const auto& a = j.at("adam");
            std::set<std::string> inner;
            take(a, "lr", c.adam.lr, inner);
            take(a, "beta1", c.adam.beta1, inner);
            take(a, "beta2", c.adam.beta2, inner);
            take(a, "eps", c.adam.eps, inner);
            for (const auto& [k, v] : a.items())
                if (!inner.count(k)) throw HarnessError("config: unknown key adam." + k);
        }
        take(j, "steps", c.steps, seen);
        take(j, "batch", c.batch, seen);
        take(j, "mask_threshold", c.mask_threshold, seen);
        take(j, "workers", c.workers, seen);
        take(j, "seed", c.seed, seen);
    } catch (const nlohmann::json::exception& e) {
        throw HarnessError(std::string("config: ") + e.what());
    }
    for (const auto& [k, v] : j.items())
        if (!seen.count(k)) throw HarnessError("config: unknown key " + k);
    return c;
}

}  // namespace sct::harness
