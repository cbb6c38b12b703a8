#include "sct/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "sct/core/rng.hpp"
#include "sct/nn/checkpoint.hpp"
#include "sct/nn/layers.hpp"
#include "sct/volume/intensity.hpp"
#include "sct/volume/io.hpp"

namespace sct::harness {

Split split_subjects(std::size_t n, std::uint64_t seed, const std::array<double, 3>& ratios) {
    const auto dn = static_cast<double>(n);
    const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * dn));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * dn));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw HarnessError("split: " + std::to_string(n) + " subjects leave an empty train, val or test set");
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(ids);
    Split s;
    s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                 ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
    for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
    return s;
}

Split experiment_split(const ExperimentConfig& cfg) {
    return split_subjects(cfg.subjects, derive_seed(cfg.seed, 500), cfg.split_ratios);
}

nlohmann::ordered_json to_json(const Split& s) {
    auto names = [](const std::vector<std::size_t>& ids) {
        std::vector<std::string> out;
        for (auto i : ids) out.push_back(subject_id(i));
        return out;
    };
    nlohmann::ordered_json j;
    j["train"] = names(s.train);
    j["val"] = names(s.val);
    j["test"] = names(s.test);
    return j;
}

Split split_from_json(const nlohmann::json& j) {
    auto ids = [](const nlohmann::json& a) {
        std::vector<std::size_t> out;
        for (const auto& name : a) {
            const auto s = name.get<std::string>();
            if (s.rfind("sub-", 0) != 0) throw HarnessError("split: bad subject id " + s);
            out.push_back(std::stoul(s.substr(4)) - 1);
        }
        return out;
    };
    try {
        return {ids(j.at("train")), ids(j.at("val")), ids(j.at("test"))};
    } catch (const nlohmann::json::exception& e) {
        throw HarnessError(std::string("split: ") + e.what());
    }
}

Subject subject_from_phantom(const std::string& id, const Phantom& p, const ExperimentConfig& cfg) {
    Subject s{id, {}, p.ct, p.skull, p.brain};
    for (const auto& m : cfg.modalities) s.mr.push_back(normalize_mr(m == "mr1" ? p.mr1 : p.mr2));
    return s;
}

void save_phantom(const Phantom& p, const std::filesystem::path& dir, const std::string& id) {
    std::filesystem::create_directories(dir);
    save_volume(p.mr1, dir / (id + "_mr1.vvol"));
    save_volume(p.mr2, dir / (id + "_mr2.vvol"));
    save_volume(p.ct, dir / (id + "_ct.vvol"));
    save_mask(p.skull, dir / (id + "_skull.vvol"));
    save_mask(p.brain, dir / (id + "_brain.vvol"));
}

Subject load_subject(const std::filesystem::path& dir, const std::string& id, const ExperimentConfig& cfg) {
    Subject s;
    s.id = id;
    for (const auto& m : cfg.modalities) s.mr.push_back(normalize_mr(load_volume(dir / (id + "_" + m + ".vvol"))));
    s.ct = load_volume(dir / (id + "_ct.vvol"));
    if (s.ct.domain() != Domain::HU) throw HarnessError("subject " + id + ": CT volume is not in HU");
    s.skull = load_mask(dir / (id + "_skull.vvol"));
    s.brain = load_mask(dir / (id + "_brain.vvol"));
    return s;
}

nn::Tensor mr_patch_tensor(const Subject& s, const Index3& origin, int patch) {
    const Dims3 size{patch, patch, patch};
    const auto per = static_cast<std::size_t>(size.volume());
    nn::Tensor t({1, static_cast<int>(s.mr.size()), patch, patch, patch});
    for (std::size_t c = 0; c < s.mr.size(); ++c) {
        const Volume p = extract_patch(s.mr[c], origin, size);
        std::copy(p.data().begin(), p.data().end(), t.data() + c * per);
    }
    return t;
}

namespace {

nn::Tensor single_channel(const Volume& v, int patch) {
    nn::Tensor t({1, 1, patch, patch, patch});
    std::copy(v.data().begin(), v.data().end(), t.data());
    return t;
}

nn::Tensor single_channel(const BinaryMask& m, int patch) {
    nn::Tensor t({1, 1, patch, patch, patch});
    for (std::size_t i = 0; i < m.size(); ++i) t[i] = m[i] ? 1.0 : 0.0;
    return t;
}

nn::TrainingSample make_sample(const Subject& s, const Volume& ct_norm, const Index3& origin, int patch) {
    const Dims3 size{patch, patch, patch};
    BinaryMask skull = extract_patch(s.skull, origin, size);
    nn::TrainingSample out{mr_patch_tensor(s, origin, patch), single_channel(skull, patch),
                           single_channel(extract_patch(ct_norm, origin, size), patch), std::move(skull)};
    return out;
}

nn::ModelDescriptor descriptor(const ExperimentConfig& cfg, int in_channels, std::uint64_t seed) {
    nn::ModelDescriptor d;
    d.in_channels = in_channels;
    d.widths = cfg.widths;
    d.heads = cfg.heads;
    d.embed_dim = cfg.embed_dim;
    d.patch = cfg.patch;
    d.seed = seed;
    return d;
}

}  // namespace

nn::TrainingSet build_training_set(const ExperimentConfig& cfg, const std::vector<Subject>& subjects,
                                   std::ostream* sampling_log) {
    const Dims3 patch{cfg.patch, cfg.patch, cfg.patch};
    nn::TrainingSet set;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const Subject& s = subjects[i];
        const Volume ct_norm = normalize_ct(s.ct);
        const std::uint64_t subject_seed = derive_seed(derive_seed(cfg.seed, 200), i);
        struct Pipeline {
            const char* name;
            double fraction;
            std::vector<nn::TrainingSample>* pool;
        };
        for (const Pipeline& p : {Pipeline{"regression", cfg.skull_fraction_reg, &set.regression},
                                  Pipeline{"segmentation", cfg.skull_fraction_seg, &set.segmentation}}) {
            const std::uint64_t seed = derive_seed(subject_seed, p.pool == &set.regression ? 1 : 2);
            const CenterSample sample =
                sample_centers(s.skull, s.brain, cfg.patches_per_subject, p.fraction, patch, seed);
            for (const auto& o : sample.origins) p.pool->push_back(make_sample(s, ct_norm, o, cfg.patch));
            if (sampling_log) {
                nlohmann::ordered_json rec;
                rec["subject"] = s.id;
                rec["pipeline"] = p.name;
                rec["skull_fraction"] = p.fraction;
                rec["n"] = sample.origins.size();
                rec["skull"] = sample.count(Stratum::Skull);
                rec["other"] = sample.count(Stratum::Other);
                rec["sample"] = to_json(sample);
                *sampling_log << rec.dump() << '\n';
            }
        }
    }
    return set;
}

Models initial_models(const ExperimentConfig& cfg) {
    cfg.validate();
    Models m{nn::build_model(descriptor(cfg, cfg.in_channels(), derive_seed(cfg.seed, 300))),
             nn::build_model(descriptor(cfg, cfg.in_channels() + 1, derive_seed(cfg.seed, 301)))};
    nn::round_to_float(m.seg);
    nn::round_to_float(m.reg);
    return m;
}

Models run_training(const ExperimentConfig& cfg, const std::vector<Subject>& subjects, std::ostream* train_log,
                    std::ostream* sampling_log) {
    if (subjects.empty()) throw HarnessError("run_training: no training subjects");
    Models init = initial_models(cfg);
    const nn::TrainingSet data = build_training_set(cfg, subjects, sampling_log);
    nn::TrainConfig tc;
    tc.loss = cfg.loss;
    tc.adam = cfg.adam;
    tc.steps = cfg.steps;
    tc.batch = cfg.batch;
    tc.seed = derive_seed(cfg.seed, 400);
    nn::TrainResult r = nn::train_loop(std::move(init.seg), std::move(init.reg), data, tc, train_log);
    nn::round_to_float(r.seg);
    nn::round_to_float(r.reg);
    return {std::move(r.seg), std::move(r.reg)};
}

Synthesis run_synthesis(const Models& models, const Subject& subject, const ExperimentConfig& cfg) {
    if (models.seg.desc.in_channels != static_cast<int>(subject.mr.size()) ||
        models.reg.desc.in_channels != models.seg.desc.in_channels + 1)
        throw HarnessError("run_synthesis: model channels do not match the selected modalities");
    if (models.seg.desc.patch != cfg.patch || models.reg.desc.patch != cfg.patch)
        throw HarnessError("run_synthesis: model patch size does not match the config");
    const Dims3 dims = subject.ct.dims();
    const Dims3 size{cfg.patch, cfg.patch, cfg.patch};
    const PatchSet grid = patch_grid({dims, size, {cfg.step, cfg.step, cfg.step}});

    std::vector<Patch> seg_patches(grid.size()), reg_patches(grid.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const Index3& o = grid.origins[k];
            const nn::Tensor mr = mr_patch_tensor(subject, o, cfg.patch);
            const nn::Tensor prob = nn::forward(models.seg, mr).seg;
            nn::Tensor mask = prob.zeros_like();
            for (std::size_t i = 0; i < prob.size(); ++i) mask[i] = prob[i] >= cfg.mask_threshold ? 1.0 : 0.0;
            const nn::Tensor reg = nn::forward(models.reg, nn::concat_channels(mr, mask)).reg;
            seg_patches[k] = {o, Volume(size, {}, Domain::RAW, {prob.values().begin(), prob.values().end()})};
            reg_patches[k] = {o, Volume(size, {}, Domain::RAW, {reg.values().begin(), reg.values().end()})};
        }
    };
    const std::size_t workers = std::min<std::size_t>(cfg.workers, std::max<std::size_t>(grid.size(), 1));
    if (workers <= 1) {
        run_range(0, grid.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (grid.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk, e = std::min(grid.size(), b + chunk);
            if (b < e) pool.emplace_back(run_range, b, e);
        }
    }

    const Reconstruction seg = reconstruct(seg_patches, dims, Domain::RAW, cfg.workers);
    const Reconstruction reg = reconstruct(reg_patches, dims, Domain::RAW, cfg.workers);
    const auto n = static_cast<std::size_t>(dims.volume());
    std::vector<float> reg_clamped(n), sct(n);
    std::vector<std::uint8_t> skull(n);
    for (std::size_t i = 0; i < n; ++i) {
        reg_clamped[i] = std::clamp(reg.volume[i], 0.0f, 1.0f);
        skull[i] = seg.volume[i] >= cfg.mask_threshold ? 1 : 0;
        sct[i] = skull[i] ? reg_clamped[i] : 0.0f;
    }
    const Spacing sp = subject.ct.spacing();
    return {Volume(dims, sp, Domain::NORM_CT, std::move(sct)),
            Volume(dims, sp, Domain::RAW, {seg.volume.data().begin(), seg.volume.data().end()}),
            BinaryMask(dims, std::move(skull)), Volume(dims, sp, Domain::NORM_CT, std::move(reg_clamped))};
}

metrics::SubjectEvaluation evaluation_of(const Subject& s, const Synthesis& syn) {
    return {s.id, &syn.sct, &syn.skull, &s.ct, &s.skull};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* train_log, std::ostream* sampling_log) {
    cfg.validate();
    ExperimentResult r;
    r.split = experiment_split(cfg);
    auto subject = [&](std::size_t i) { return subject_from_phantom(subject_id(i), make_phantom(cfg.phantom_spec(i)), cfg); };

    std::vector<Subject> train;
    for (auto i : r.split.train) train.push_back(subject(i));
    r.models = run_training(cfg, train, train_log, sampling_log);

    std::vector<Subject> test;
    for (auto i : r.split.test) {
        test.push_back(subject(i));
        r.test_ids.push_back(test.back().id);
        r.synthesis.push_back(run_synthesis(r.models, test.back(), cfg));
    }
    std::vector<metrics::SubjectEvaluation> evals;
    for (std::size_t k = 0; k < test.size(); ++k) evals.push_back(evaluation_of(test[k], r.synthesis[k]));
    r.report = metrics::build_report(evals);
    return r;
}

}  // namespace sct::harness
