#include "sct/metrics/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "sct/volume/intensity.hpp"

namespace sct::metrics {

double metric_value(const SubjectMetrics& m, std::string_view name) {
    return metric_value(const_cast<SubjectMetrics&>(m), name);
}

double& metric_value(SubjectMetrics& m, std::string_view name) {
    if (name == "ssim") return m.ssim;
    if (name == "pearson") return m.pearson;
    if (name == "spearman") return m.spearman;
    if (name == "dice") return m.dice;
    if (name == "jaccard") return m.jaccard;
    if (name == "psnr_db") return m.psnr_db;
    if (name == "mae_skull_hu") return m.mae_skull_hu;
    throw MetricError("unknown metric: " + std::string(name));
}

SubjectMetrics evaluate_subject(const SubjectEvaluation& s, const SsimOptions& opt) {
    if (!s.pred_ct || !s.pred_skull || !s.truth_hu || !s.truth_skull)
        throw MetricError("evaluate_subject: missing volume for " + s.id);
    const Volume truth = normalize_ct(*s.truth_hu);
    SubjectMetrics m;
    m.ssim = ssim(*s.pred_ct, truth, opt);
    m.pearson = pearson(*s.pred_ct, truth);
    m.spearman = spearman(*s.pred_ct, truth);
    const Overlap d = dice_coeff(*s.pred_skull, *s.truth_skull);
    const Overlap j = jaccard(*s.pred_skull, *s.truth_skull);
    m.dice = d.value;
    m.jaccard = j.value;
    m.overlap_degenerate = d.degenerate;
    m.psnr_db = psnr(*s.pred_ct, truth);
    m.mae_skull_hu = mae_skull(*s.pred_ct, *s.truth_hu, *s.truth_skull);
    return m;
}

namespace {

SubjectMetrics mean_of(const std::vector<SubjectResult>& rows) {
    SubjectMetrics mean;
    for (auto name : kMetricNames) {
        double acc = 0.0;
        for (const auto& r : rows) acc += metric_value(r.metrics, name);
        metric_value(mean, name) = acc / static_cast<double>(rows.size());
    }
    return mean;
}

std::vector<double> column(const MetricsReport& r, std::string_view name) {
    std::vector<double> out;
    for (const auto& s : r.subjects) out.push_back(metric_value(s.metrics, name));
    return out;
}

nlohmann::ordered_json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return v;
}

double read_number(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw MetricError("report: unexpected string value " + s);
    }
    return j.get<double>();
}

nlohmann::ordered_json metrics_json(const SubjectMetrics& m) {
    nlohmann::ordered_json j;
    for (auto name : kMetricNames) j[std::string(name)] = number(metric_value(m, name));
    return j;
}

SubjectMetrics metrics_from(const nlohmann::json& j) {
    SubjectMetrics m;
    for (auto name : kMetricNames) metric_value(m, name) = read_number(j.at(std::string(name)));
    return m;
}

}  // namespace

MetricsReport compare_reports(const MetricsReport& a, const MetricsReport& b) {
    if (a.subjects.size() != b.subjects.size()) throw MetricError("compare: reports cover different subjects");
    for (std::size_t i = 0; i < a.subjects.size(); ++i)
        if (a.subjects[i].id != b.subjects[i].id)
            throw MetricError("compare: subject mismatch " + a.subjects[i].id + " vs " + b.subjects[i].id);
    MetricsReport out = a;
    out.tests.clear();
    for (auto name : kMetricNames) out.tests[std::string(name)] = paired_t_test(column(a, name), column(b, name));
    return out;
}

MetricsReport build_report(std::span<const SubjectEvaluation> subjects, const MetricsReport* baseline,
                           const SsimOptions& opt) {
    if (subjects.empty()) throw MetricError("build_report: no subjects");
    MetricsReport r;
    for (const auto& s : subjects) r.subjects.push_back({s.id, evaluate_subject(s, opt)});
    r.mean = mean_of(r.subjects);
    if (baseline) return compare_reports(r, *baseline);
    return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["metrics"] = kMetricNames;
    auto& subjects = j["subjects"] = nlohmann::ordered_json::array();
    for (const auto& s : r.subjects) {
        nlohmann::ordered_json row;
        row["id"] = s.id;
        row.update(metrics_json(s.metrics));
        row["overlap_degenerate"] = s.metrics.overlap_degenerate;
        subjects.push_back(std::move(row));
    }
    j["mean"] = metrics_json(r.mean);
    if (!r.tests.empty()) {
        nlohmann::ordered_json tests;
        for (auto name : kMetricNames) {
            const auto it = r.tests.find(std::string(name));
            if (it == r.tests.end()) continue;
            tests[std::string(name)] = {{"t", number(it->second.t)},
                                        {"p", number(it->second.p)},
                                        {"n", it->second.n},
                                        {"degenerate", it->second.degenerate}};
        }
        j["tests"] = std::move(tests);
    }
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    try {
        for (const auto& row : j.at("subjects")) {
            SubjectResult s{row.at("id").get<std::string>(), metrics_from(row)};
            s.metrics.overlap_degenerate = row.value("overlap_degenerate", false);
            r.subjects.push_back(std::move(s));
        }
        r.mean = metrics_from(j.at("mean"));
        if (j.contains("tests"))
            for (const auto& [name, t] : j.at("tests").items())
                r.tests[name] = {read_number(t.at("t")), read_number(t.at("p")), t.at("n").get<std::size_t>(),
                                 t.value("degenerate", false)};
    } catch (const nlohmann::json::exception& e) {
        throw MetricError("malformed report: " + std::string(e.what()));
    }
    return r;
}

namespace {

std::string cell(double v, int precision) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

int precision_of(std::string_view name) {
    if (name == "psnr_db") return 2;
    if (name == "mae_skull_hu") return 1;
    return 4;
}

}  // namespace

std::string to_table(const MetricsReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"subject"});
    for (auto name : kMetricNames) rows.back().emplace_back(name);
    for (const auto& s : r.subjects) {
        rows.push_back({s.id});
        for (auto name : kMetricNames) rows.back().push_back(cell(metric_value(s.metrics, name), precision_of(name)));
    }
    rows.push_back({"Avg"});
    for (auto name : kMetricNames) rows.back().push_back(cell(metric_value(r.mean, name), precision_of(name)));
    if (!r.tests.empty()) {
        rows.push_back({"p-value"});
        for (auto name : kMetricNames) {
            const auto it = r.tests.find(std::string(name));
            rows.back().push_back(it == r.tests.end() ? "-" : cell(it->second.p, 4));
        }
    }

    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                out << row[c] << std::string(width[c] - row[c].size(), ' ');
            } else {
                out << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace sct::metrics
