#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "sct/harness/config.hpp"
#include "sct/metrics/report.hpp"
#include "sct/nn/train.hpp"
#include "sct/patch/patch.hpp"

namespace sct::harness {

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) cut into train = round(r0 n), val = floor(r1 n), test = remainder.
/// Throws HarnessError when any part would be empty.
Split split_subjects(std::size_t n, std::uint64_t seed, const std::array<double, 3>& ratios = {0.8, 0.1, 0.1});

/// The split of cfg.subjects used by every pipeline stage.
Split experiment_split(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const Split& s);
Split split_from_json(const nlohmann::json& j);

/// One subject as the pipelines see it: normalized MR channels, HU CT and the reference masks.
struct Subject {
    std::string id;
    std::vector<Volume> mr;  ///< NORM_MR, one per selected modality
    Volume ct;               ///< HU
    BinaryMask skull;
    BinaryMask brain;
};

/// Normalizes the phantom contrasts named in cfg.modalities.
Subject subject_from_phantom(const std::string& id, const Phantom& p, const ExperimentConfig& cfg);

/// Volumes of one subject on disk: <dir>/<id>_{mr1,mr2,ct,skull,brain}.vvol.
void save_phantom(const Phantom& p, const std::filesystem::path& dir, const std::string& id);
Subject load_subject(const std::filesystem::path& dir, const std::string& id, const ExperimentConfig& cfg);

/// [1, C, P, P, P] stack of the MR channels at `origin`.
nn::Tensor mr_patch_tensor(const Subject& s, const Index3& origin, int patch);

/// Patch pools for both pipelines: per subject, sample_centers with cfg.skull_fraction_reg
/// (regression) and cfg.skull_fraction_seg (segmentation). One JSON line per subject and
/// pipeline goes to `sampling_log`.
nn::TrainingSet build_training_set(const ExperimentConfig& cfg, const std::vector<Subject>& subjects,
                                   std::ostream* sampling_log = nullptr);

struct Models {
    nn::ModelParams seg;
    nn::ModelParams reg;
};

/// Deterministic initial models for cfg (weights rounded to float32, as stored in checkpoints).
Models initial_models(const ExperimentConfig& cfg);

/// Builds the patch pools and runs train_loop. Trained weights are rounded to float32 so the
/// in-memory models equal what a checkpoint round trip returns.
Models run_training(const ExperimentConfig& cfg, const std::vector<Subject>& subjects,
                    std::ostream* train_log = nullptr, std::ostream* sampling_log = nullptr);

struct Synthesis {
    Volume sct;            ///< NORM_CT, exactly 0 outside `skull`
    Volume seg_prob;       ///< RAW, overlap-averaged segmentation probability
    BinaryMask skull;      ///< seg_prob >= cfg.mask_threshold
    Volume regression;     ///< NORM_CT, overlap-averaged regression clamped to [0, 1]
};

/// Full-grid inference: segmentation per patch, binarized mask appended to the MR channels for
/// the regression model, overlap-averaged reconstruction of both, regression masked by the
/// reconstructed segmentation. Results do not depend on cfg.workers.
Synthesis run_synthesis(const Models& models, const Subject& subject, const ExperimentConfig& cfg);

metrics::SubjectEvaluation evaluation_of(const Subject& s, const Synthesis& syn);

/// In-memory phantom -> split -> train -> synthesize -> evaluate on the test subjects.
struct ExperimentResult {
    Split split;
    Models models;
    std::vector<std::string> test_ids;
    std::vector<Synthesis> synthesis;  ///< one per test subject
    metrics::MetricsReport report;
};
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* train_log = nullptr,
                                 std::ostream* sampling_log = nullptr);

}  // namespace sct::harness
