// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "sct/core/rng.hpp"
#include "sct/harness/cli.hpp"
#include "sct/harness/harness.hpp"
#include "sct/nn/gradcheck.hpp"
#include "sct/volume/intensity.hpp"

using namespace sct;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %d. %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

PatchGridSpec random_spec(Rng& rng, std::int64_t max_dim, std::int64_t max_patch) {
    PatchGridSpec s;
    for (int a = 0; a < 3; ++a) {
        s.dims[a] = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(max_dim)));
        s.patch[a] = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(std::min(s.dims[a], max_patch))));
        s.step[a] = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(s.patch[a])));
    }
    return s;
}

// ---- independent metric references ----

double ref_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
    }
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - sa / n) * (b[i] - sb / n);
        va += (a[i] - sa / n) * (a[i] - sa / n);
        vb += (b[i] - sb / n) * (b[i] - sb / n);
    }
    return cov / std::sqrt(va * vb);
}

std::vector<double> ref_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1 + less + (equal - 1) / 2;
    }
    return r;
}

double ref_ssim(const std::vector<double>& a, const std::vector<double>& b, Dims3 dims, int side, double sigma) {
    const double c = (side - 1) / 2.0;
    std::vector<double> w(static_cast<std::size_t>(side * side * side));
    double total = 0;
    for (int z = 0; z < side; ++z)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                total += w[(z * side + y) * side + x] =
                    std::exp(-((z - c) * (z - c) + (y - c) * (y - c) + (x - c) * (x - c)) / (2 * sigma * sigma));
    for (double& v : w) v /= total;
    double acc = 0;
    int count = 0;
    for (std::int64_t z0 = 0; z0 + side <= dims.z; ++z0)
        for (std::int64_t y0 = 0; y0 + side <= dims.y; ++y0)
            for (std::int64_t x0 = 0; x0 + side <= dims.x; ++x0) {
                double mx = 0, my = 0;
                auto each = [&](auto fn) {
                    for (int z = 0; z < side; ++z)
                        for (int y = 0; y < side; ++y)
                            for (int x = 0; x < side; ++x)
                                fn(w[(z * side + y) * side + x], linear_index(dims, z0 + z, y0 + y, x0 + x));
                };
                each([&](double wt, std::size_t i) {
                    mx += wt * a[i];
                    my += wt * b[i];
                });
                double vx = 0, vy = 0, cxy = 0;
                each([&](double wt, std::size_t i) {
                    vx += wt * (a[i] - mx) * (a[i] - mx);
                    vy += wt * (b[i] - my) * (b[i] - my);
                    cxy += wt * (a[i] - mx) * (b[i] - my);
                });
                acc += (2 * mx * my + 1e-4) * (2 * cxy + 9e-4) / ((mx * mx + my * my + 1e-4) * (vx + vy + 9e-4));
                ++count;
            }
    return acc / count;
}

double quadrature_p(double t, double df) {
    const double k = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
    auto pdf = [&](double x) { return k * std::pow(1 + x * x / df, -(df + 1) / 2); };
    const int n = 200000;
    const double h = std::abs(t) / n;
    double s = pdf(0) + pdf(std::abs(t));
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
    return 1 - 2 * s * h / 3;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main() {
    report(1, "patch count on 207x243x226, patch 128, step 6", [] {
        const auto t0 = Clock::now();
        const auto n = patch_grid({{207, 243, 226}, {128, 128, 128}, {6, 6, 6}}).size();
        const double dt = seconds_since(t0);
        return Outcome{n == 5670 && dt < 1.0, fmt("%zu origins (expected 5670), %.3f s (limit 1 s)", n, dt)};
    });

    report(2, "extract/reconstruct round trip", [] {
        const auto t0 = Clock::now();
        Rng rng(2);
        double worst = 0;
        bool covered = true;
        for (int t = 0; t < 50; ++t) {
            const PatchGridSpec s = random_spec(rng, 48, 16);
            std::vector<float> data(static_cast<std::size_t>(s.dims.volume()));
            for (float& v : data) v = static_cast<float>(rng.uniform(-1, 1));
            const Volume v(s.dims, {}, Domain::RAW, data);
            std::vector<Patch> patches;
            for (const auto& o : patch_grid(s).origins) patches.push_back({o, extract_patch(v, o, s.patch)});
            const auto r = reconstruct(patches, s.dims);
            covered = covered && r.coverage.count() == v.size();
            for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, static_cast<double>(std::abs(r.volume[i] - v[i])));
        }
        const double dt = seconds_since(t0);
        return Outcome{worst <= 1e-6 && covered && dt < 30.0,
                       fmt("50 configs, max abs error %.2e (limit 1e-6), full coverage %s, %.1f s (limit 30 s)", worst,
                           covered ? "yes" : "no", dt)};
    });

    report(3, "patch grid vs brute-force enumeration and closed form", [] {
        Rng rng(3);
        int mismatches = 0, divides = 0, formula_mismatches = 0;
        for (int t = 0; t < 200; ++t) {
            const PatchGridSpec s = random_spec(rng, 64, 24);
            std::set<Index3> oracle;
            auto axis = [](std::int64_t dim, std::int64_t p, std::int64_t step) {
                std::set<std::int64_t> out;
                for (std::int64_t k = 0; k * step <= dim; ++k) out.insert(std::min(k * step, dim - p));
                return out;
            };
            for (auto z : axis(s.dims.z, s.patch.z, s.step.z))
                for (auto y : axis(s.dims.y, s.patch.y, s.step.y))
                    for (auto x : axis(s.dims.x, s.patch.x, s.step.x)) oracle.insert({z, y, x});
            const PatchSet set = patch_grid(s);
            if (set.size() != oracle.size() || !std::equal(set.origins.begin(), set.origins.end(), oracle.begin())) ++mismatches;
            bool div = true;
            for (int a = 0; a < 3; ++a) div = div && (s.dims[a] - s.patch[a]) % s.step[a] == 0;
            if (div) {
                ++divides;
                if (static_cast<double>(set.size()) != formula_patch_count(s)) ++formula_mismatches;
            }
        }
        return Outcome{mismatches == 0 && formula_mismatches == 0,
                       fmt("200 specs, %d enumeration mismatches, %d/%d step-divides cases off the closed form",
                           mismatches, formula_mismatches, divides)};
    });

    report(4, "gradient suite", [] {
        const auto t0 = Clock::now();
        const auto results = nn::run_gradient_suite();
        const double dt = seconds_since(t0);
        double worst = 0;
        std::string failed;
        for (const auto& r : results) {
            worst = std::max(worst, r.max_rel_error);
            if (!r.passed) failed += " " + r.name;
        }
        return Outcome{failed.empty() && dt < 60.0,
                       fmt("%zu checks, max rel error %.2e (limit 1e-4, abs floor 1e-7), %.1f s (limit 60 s)%s",
                           results.size(), worst, dt, failed.empty() ? "" : (", failed:" + failed).c_str())};
    });

    report(5, "metric oracles", [] {
        const Dims3 dims{8, 8, 8};
        Rng rng(5);
        double e_pearson = 0, e_spearman = 0, e_ssim = 0, e_dice = 0, e_jacc = 0, e_psnr = 0, e_mae = 0, e_ident = 0;
        for (int t = 0; t < 100; ++t) {
            std::vector<double> a(512), b(512);
            std::vector<float> hu(512), pred(512);
            std::vector<std::uint8_t> ma(512), mb(512);
            for (std::size_t i = 0; i < 512; ++i) {
                a[i] = static_cast<float>(rng.uniform01());
                b[i] = static_cast<float>(rng.uniform01());
                pred[i] = static_cast<float>(a[i]);
                hu[i] = static_cast<float>(rng.uniform(-1024, 3071));
                ma[i] = rng.uniform01() < 0.4;
                mb[i] = rng.uniform01() < 0.4;
            }
            const Volume va(dims, {}, Domain::NORM_CT, std::vector<float>(a.begin(), a.end()));
            const Volume vb(dims, {}, Domain::NORM_CT, std::vector<float>(b.begin(), b.end()));
            const Volume vhu(dims, {}, Domain::HU, hu);
            const BinaryMask A(dims, ma), B(dims, mb);

            e_pearson = std::max(e_pearson, std::abs(metrics::pearson(va, vb) - ref_pearson(a, b)));
            e_spearman = std::max(e_spearman, std::abs(metrics::spearman(va, vb) - ref_pearson(ref_ranks(a), ref_ranks(b))));
            e_ssim = std::max(e_ssim, std::abs(metrics::ssim(va, vb) - ref_ssim(a, b, dims, 7, 1.5)));

            double both = 0, na = 0, nb = 0, uni = 0, se = 0, mae = 0, nskull = 0;
            for (std::size_t i = 0; i < 512; ++i) {
                both += ma[i] && mb[i];
                na += ma[i];
                nb += mb[i];
                uni += ma[i] || mb[i];
                se += (a[i] - b[i]) * (a[i] - b[i]);
                if (ma[i]) {
                    mae += std::abs(a[i] * 3071.0 - std::clamp(static_cast<double>(hu[i]), 0.0, 3071.0));
                    ++nskull;
                }
            }
            const double dice = metrics::dice_coeff(A, B).value, jac = metrics::jaccard(A, B).value;
            e_dice = std::max(e_dice, std::abs(dice - 2 * both / (na + nb)));
            e_jacc = std::max(e_jacc, std::abs(jac - both / uni));
            e_ident = std::max(e_ident, std::abs(dice - 2 * jac / (1 + jac)));
            e_psnr = std::max(e_psnr, std::abs(metrics::psnr(va, vb) - 10 * std::log10(512.0 / se)));
            e_mae = std::max(e_mae, std::abs(metrics::mae_skull(va, vhu, A) - mae / nskull));
        }
        const std::vector<double> d{1, 2, 3, 4}, zero(4, 0.0);
        const auto tt = metrics::paired_t_test(d, zero);
        const double e_p = std::abs(tt.p - quadrature_p(tt.t, 3));
        const bool ok = e_pearson <= 1e-9 && e_spearman <= 1e-9 && e_ssim <= 1e-6 && e_dice <= 1e-9 && e_jacc <= 1e-9 &&
                        e_psnr <= 1e-9 && e_mae <= 1e-9 && e_ident <= 1e-12 && e_p <= 1e-6;
        return Outcome{ok, fmt("100 pairs: pearson %.1e, spearman %.1e, ssim %.1e, dice %.1e, jaccard %.1e, psnr %.1e, "
                               "mae %.1e, dice-jaccard identity %.1e; t-test t=%.4f p=%.6f (quadrature error %.1e)",
                               e_pearson, e_spearman, e_ssim, e_dice, e_jacc, e_psnr, e_mae, e_ident, tt.t, tt.p, e_p)};
    });

    report(6, "CT normalization", [] {
        const float top = normalize_ct(Volume::filled({1, 1, 1}, 3071.0f, Domain::HU))[0];
        Rng rng(6);
        double worst_ulps = 0;
        for (int t = 0; t < 10; ++t) {
            std::vector<float> hu(4096);
            for (float& v : hu) v = static_cast<float>(rng.uniform(-1024, 3071));
            const Volume h({16, 16, 16}, {}, Domain::HU, hu);
            const Volume back = denormalize_ct(normalize_ct(h));
            for (std::size_t i = 0; i < hu.size(); ++i) {
                const float expect = std::clamp(hu[i], 0.0f, 3071.0f);
                const float ulp = std::nextafter(std::max(expect, 1.0f), 1e9f) - std::max(expect, 1.0f);
                worst_ulps = std::max(worst_ulps, static_cast<double>(std::abs(back[i] - expect) / ulp));
            }
        }
        return Outcome{top == 1.0f && worst_ulps <= 1.0,
                       fmt("normalize_ct(3071) = %.9g, round trip within %.2f ulp (limit 1)", top, worst_ulps)};
    });

    report(7, "end-to-end phantom smoke (8/1/1 subjects, 16^3 patches, 2000 steps)", [] {
        const auto t0 = Clock::now();
        harness::ExperimentConfig cfg;
        const auto r = harness::run_experiment(cfg);
        const double dt = seconds_since(t0);
        const auto& m = r.report.subjects.at(0).metrics;
        return Outcome{m.dice >= 0.7 && m.mae_skull_hu <= 300.0 && dt <= 600.0,
                       fmt("test %s: skull Dice %.4f (>= 0.7), skull MAE %.1f HU (<= 300), %.0f s (<= 600)",
                           r.test_ids.at(0).c_str(), m.dice, m.mae_skull_hu, dt)};
    });

    report(8, "dual-modality trend over 3 seeds (600 steps each)", [] {
        int wins = 0;
        std::string detail;
        for (std::uint64_t seed : {1, 2, 3}) {
            harness::ExperimentConfig dual;
            dual.steps = 600;
            dual.seed = seed;
            harness::ExperimentConfig single = dual;
            single.modalities = {"mr1"};
            const double pd = harness::run_experiment(dual).report.mean.pearson;
            const double ps = harness::run_experiment(single).report.mean.pearson;
            wins += pd >= ps;
            detail += fmt("%sseed %llu dual %.4f vs single %.4f", detail.empty() ? "" : "; ",
                          static_cast<unsigned long long>(seed), pd, ps);
        }
        return Outcome{wins >= 2, fmt("%d/3 seeds favour dual (need 2): ", wins) + detail};
    });

    report(9, "train + evaluate determinism through the CLI", [] {
        const fs::path root = fs::temp_directory_path() / "sct_acceptance_determinism";
        fs::remove_all(root);
        std::ostringstream sink;
        std::vector<std::string> files;
        for (const char* name : {"a", "b"}) {
            const std::string run = (root / name).string();
            for (const auto& args : std::vector<std::vector<std::string>>{
                     {"phantom", "--out", run, "--n", "10", "--seed", "9"},
                     {"train", "--run", run, "--steps", "100", "--batch", "2"},
                     {"synthesize", "--run", run},
                     {"evaluate", "--run", run}}) {
                if (harness::run_cli(args, sink, sink) != 0) return Outcome{false, "CLI failed: " + sink.str()};
            }
        }
        bool same = true;
        for (const char* f : {"reports/report.json", "reports/report.txt", "checkpoints/seg.bin", "checkpoints/reg.bin",
                              "logs/train.jsonl", "config.json"})
            same = same && slurp(root / "a" / f) == slurp(root / "b" / f) && !slurp(root / "a" / f).empty();
        return Outcome{same, same ? "two runs with identical config produce byte-identical reports, checkpoints and logs"
                                  : "outputs differ between identical runs"};
    });

    std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
