#include "sct/harness/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "sct/harness/harness.hpp"
#include "sct/nn/checkpoint.hpp"
#include "sct/nn/gradcheck.hpp"
#include "sct/volume/intensity.hpp"
#include "sct/volume/io.hpp"

namespace sct::harness {

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config_file;
    std::vector<std::string> set;
    std::optional<std::size_t> subjects, steps, batch, patches;
    std::optional<std::uint64_t> seed;
    std::optional<double> lr, lambda;
    std::optional<int> patch, step, dims;
    std::optional<unsigned> workers;
    std::vector<std::string> modalities;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_file, "JSON config merged over the run's config.json");
    cmd->add_option("--set", o.set, "Override key=value (value parsed as JSON; dotted keys for nested objects)");
    cmd->add_option("--seed", o.seed, "Base seed");
    cmd->add_option("--steps", o.steps, "Training steps");
    cmd->add_option("--batch", o.batch, "Batch size");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--lambda", o.lambda, "BCE weight in the segmentation loss");
    cmd->add_option("--patch", o.patch, "Patch side");
    cmd->add_option("--step", o.step, "Inference grid step");
    cmd->add_option("--patches-per-subject", o.patches, "Training patches per subject and pipeline");
    cmd->add_option("--workers", o.workers, "Inference worker threads");
    cmd->add_option("--modalities", o.modalities, "mr1 or mr1 mr2");
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw HarnessError("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw HarnessError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw HarnessError("cannot write " + p.string());
    out << text;
    if (!out) throw HarnessError("write failed for " + p.string());
}

nlohmann::json parse_value(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        return text;
    }
}

ExperimentConfig resolve(const ExperimentConfig& base, const Overrides& o) {
    nlohmann::json patch = nlohmann::json::object();
    if (!o.config_file.empty()) patch.merge_patch(read_json(o.config_file));
    for (const auto& kv : o.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw HarnessError("--set expects key=value, got " + kv);
        std::string key = kv.substr(0, eq);
        std::string ptr = "/";
        for (char c : key) ptr += c == '.' ? '/' : c;
        patch[nlohmann::json::json_pointer(ptr)] = parse_value(kv.substr(eq + 1));
    }
    if (o.seed) patch["seed"] = *o.seed;
    if (o.steps) patch["steps"] = *o.steps;
    if (o.batch) patch["batch"] = *o.batch;
    if (o.lr) patch["adam"]["lr"] = *o.lr;
    if (o.lambda) patch["loss"]["lambda"] = *o.lambda;
    if (o.patch) patch["patch"] = *o.patch;
    if (o.step) patch["step"] = *o.step;
    if (o.patches) patch["patches_per_subject"] = *o.patches;
    if (o.workers) patch["workers"] = *o.workers;
    if (!o.modalities.empty()) patch["modalities"] = o.modalities;
    if (o.subjects) patch["subjects"] = *o.subjects;
    if (o.dims) patch["dims"] = {*o.dims, *o.dims, *o.dims};
    ExperimentConfig c = config_from_json(patch, base);
    c.validate();
    return c;
}

ExperimentConfig load_run_config(const fs::path& run, const Overrides& o) {
    const fs::path p = run / "config.json";
    if (!fs::exists(p)) throw HarnessError("missing " + p.string() + " (run `phantom` first)");
    return resolve(config_from_json(read_json(p)), o);
}

void save_config(const fs::path& run, const ExperimentConfig& c) {
    write_text(run / "config.json", to_json(c).dump(2) + "\n");
}

Split load_or_make_split(const fs::path& run, const ExperimentConfig& c) {
    const fs::path p = run / "split.json";
    if (fs::exists(p)) return split_from_json(read_json(p));
    Split s = experiment_split(c);
    write_text(p, to_json(s).dump(2) + "\n");
    return s;
}

std::vector<Subject> load_subjects(const fs::path& run, const std::vector<std::size_t>& ids, const ExperimentConfig& c) {
    std::vector<Subject> out;
    for (auto i : ids) out.push_back(load_subject(run / "volumes", subject_id(i), c));
    return out;
}

Models load_models(const fs::path& run) {
    return {nn::load_checkpoint(run / "checkpoints" / "seg"), nn::load_checkpoint(run / "checkpoints" / "reg")};
}

void write_report(const metrics::MetricsReport& r, const fs::path& stem) {
    fs::path json = stem, txt = stem;
    json += ".json";
    txt += ".txt";
    write_text(json, metrics::to_json(r).dump(2) + "\n");
    write_text(txt, metrics::to_table(r));
}

int cmd_phantom(const fs::path& out_dir, const Overrides& o, std::ostream& out) {
    const ExperimentConfig c = resolve({}, o);
    fs::create_directories(out_dir / "volumes");
    for (std::size_t i = 0; i < c.subjects; ++i) save_phantom(make_phantom(c.phantom_spec(i)), out_dir / "volumes", subject_id(i));
    save_config(out_dir, c);
    out << "wrote " << c.subjects << " phantom subjects to " << (out_dir / "volumes").string() << '\n';
    return 0;
}

int cmd_split(const fs::path& run, const Overrides& o, std::ostream& out) {
    const ExperimentConfig c = load_run_config(run, o);
    const Split s = experiment_split(c);
    write_text(run / "split.json", to_json(s).dump(2) + "\n");
    save_config(run, c);
    out << "train " << s.train.size() << ", val " << s.val.size() << ", test " << s.test.size() << '\n';
    return 0;
}

int cmd_train(const fs::path& run, const Overrides& o, std::ostream& out) {
    const ExperimentConfig c = load_run_config(run, o);
    save_config(run, c);
    const Split s = load_or_make_split(run, c);
    const auto subjects = load_subjects(run, s.train, c);
    fs::create_directories(run / "logs");
    fs::create_directories(run / "checkpoints");
    std::ofstream train_log(run / "logs" / "train.jsonl", std::ios::trunc);
    std::ofstream sampling_log(run / "logs" / "sampling.jsonl", std::ios::trunc);
    if (!train_log || !sampling_log) throw HarnessError("cannot open logs under " + (run / "logs").string());
    const Models m = run_training(c, subjects, &train_log, &sampling_log);
    nn::save_checkpoint(m.seg, run / "checkpoints" / "seg");
    nn::save_checkpoint(m.reg, run / "checkpoints" / "reg");
    out << "trained " << c.steps << " steps on " << subjects.size() << " subjects\n";
    return 0;
}

int cmd_synthesize(const fs::path& run, const Overrides& o, std::ostream& out) {
    const ExperimentConfig c = load_run_config(run, o);
    save_config(run, c);
    const Split s = load_or_make_split(run, c);
    const Models m = load_models(run);
    for (const auto& subject : load_subjects(run, s.test, c)) {
        const Synthesis syn = run_synthesis(m, subject, c);
        save_volume(syn.sct, run / "volumes" / (subject.id + "_sct.vvol"));
        save_mask(syn.skull, run / "volumes" / (subject.id + "_sctmask.vvol"), syn.sct.spacing());
        out << "synthesized " << subject.id << '\n';
    }
    return 0;
}

int cmd_evaluate(const fs::path& run, const Overrides& o, const std::string& name, const std::string& pred,
                 const std::string& pred_mask, const std::string& baseline, std::ostream& out) {
    const ExperimentConfig c = load_run_config(run, o);
    save_config(run, c);
    const Split s = load_or_make_split(run, c);
    const auto subjects = load_subjects(run, s.test, c);
    std::vector<Volume> preds;
    std::vector<BinaryMask> masks;
    for (const auto& subject : subjects) {
        Volume v = load_volume(run / "volumes" / (subject.id + "_" + pred + ".vvol"));
        if (v.domain() == Domain::HU) v = normalize_ct(v);
        if (v.domain() != Domain::NORM_CT) throw HarnessError("evaluate: " + pred + " volumes must be NORM_CT or HU");
        preds.push_back(std::move(v));
        masks.push_back(load_mask(run / "volumes" / (subject.id + "_" + pred_mask + ".vvol")));
    }
    std::vector<metrics::SubjectEvaluation> evals;
    for (std::size_t k = 0; k < subjects.size(); ++k)
        evals.push_back({subjects[k].id, &preds[k], &masks[k], &subjects[k].ct, &subjects[k].skull});
    std::optional<metrics::MetricsReport> base;
    if (!baseline.empty()) base = metrics::report_from_json(read_json(baseline));
    const auto report = metrics::build_report(evals, base ? &*base : nullptr);
    write_report(report, run / "reports" / name);
    out << metrics::to_table(report);
    return 0;
}

int cmd_compare(const fs::path& a, const fs::path& b, const fs::path& stem, std::ostream& out) {
    const auto report = metrics::compare_reports(metrics::report_from_json(read_json(a)),
                                                 metrics::report_from_json(read_json(b)));
    write_report(report, stem);
    out << metrics::to_table(report);
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
    nn::GradCheckOptions opt;
    opt.seed = seed;
    bool ok = true;
    for (const auto& r : nn::run_gradient_suite(opt)) {
        out << std::left << std::setw(30) << r.name << std::right << std::setw(6) << r.checked << "  abs "
            << std::scientific << std::setprecision(2) << r.max_abs_error << "  rel " << r.max_rel_error
            << std::defaultfloat << "  " << (r.passed ? "ok" : "FAIL") << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"MR to CT synthesis on skull phantoms"};
    app.require_subcommand(1);

    Overrides o;
    std::string run, out_dir, name = "report", pred = "sct", pred_mask = "sctmask", baseline, a, b, stem;
    std::uint64_t grad_seed = 0;

    auto* phantom = app.add_subcommand("phantom", "Write phantom subjects");
    phantom->add_option("--out", out_dir, "Run directory")->required();
    phantom->add_option("--n", o.subjects, "Subject count");
    phantom->add_option("--dims", o.dims, "Cubic volume side");
    add_config_flags(phantom, o);

    auto* split = app.add_subcommand("split", "Split subjects into train/val/test");
    auto* train = app.add_subcommand("train", "Train both pipelines");
    auto* synth = app.add_subcommand("synthesize", "Synthesize CT for the test subjects");
    auto* eval = app.add_subcommand("evaluate", "Score test subjects");
    for (auto* cmd : {split, train, synth, eval}) {
        cmd->add_option("--run", run, "Run directory")->required();
        add_config_flags(cmd, o);
    }
    eval->add_option("--name", name, "Report name under reports/");
    eval->add_option("--pred", pred, "Predicted volume suffix (NORM_CT or HU)");
    eval->add_option("--pred-mask", pred_mask, "Predicted skull mask suffix");
    eval->add_option("--baseline", baseline, "Baseline report JSON for paired t-tests");

    auto* compare = app.add_subcommand("compare", "Paired t-tests between two reports");
    compare->add_option("--a", a, "Report JSON")->required();
    compare->add_option("--b", b, "Baseline report JSON")->required();
    compare->add_option("--out", stem, "Output path without extension")->required();

    auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    grad->add_option("--seed", grad_seed, "Seed for random inputs");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (phantom->parsed()) return cmd_phantom(out_dir, o, out);
        if (split->parsed()) return cmd_split(run, o, out);
        if (train->parsed()) return cmd_train(run, o, out);
        if (synth->parsed()) return cmd_synthesize(run, o, out);
        if (eval->parsed()) return cmd_evaluate(run, o, name, pred, pred_mask, baseline, out);
        if (compare->parsed()) return cmd_compare(a, b, stem, out);
        if (grad->parsed()) return cmd_gradcheck(grad_seed, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace sct::harness
