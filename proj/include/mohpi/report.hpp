#pragma once

// Machine-readable analysis reports. The JSON layout is the contract for any
// frontend; `plot` re-renders SVG from it.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mohpi/ablation.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/fanova.hpp"
#include "mohpi/forest.hpp"
#include "mohpi/pareto.hpp"

namespace mohpi {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

struct ReportMetadata {
    std::string dataset;
    std::string space;
    std::vector<std::string> objectives;
    std::vector<std::string> hyperparameters;
    std::string tool_version = kToolVersion;
    std::size_t grid = 0;
    bool invert_weights = false;
    bool raw_incumbent = false;

    bool operator==(const ReportMetadata&) const = default;
};

struct FanovaReport {
    ReportMetadata metadata;
    ForestParams forest;
    std::vector<WeightVector> weights;
    std::vector<ImportanceCurve> curves;
    std::vector<PairCurve> pairwise;

    bool operator==(const FanovaReport&) const = default;
};

struct AblationReport {
    ReportMetadata metadata;
    ForestParams forest;
    std::vector<AblationPath> paths;

    bool operator==(const AblationReport&) const = default;
};

namespace detail {

inline nlohmann::json to_json(const ReportMetadata& m)
{
    return {{"dataset", m.dataset},
            {"space", m.space},
            {"objectives", m.objectives},
            {"hyperparameters", m.hyperparameters},
            {"tool_version", m.tool_version},
            {"grid", m.grid},
            {"invert_weights", m.invert_weights},
            {"raw_incumbent", m.raw_incumbent}};
}

inline ReportMetadata metadata_from_json(const nlohmann::json& j)
{
    ReportMetadata m;
    m.dataset = j.at("dataset").get<std::string>();
    m.space = j.at("space").get<std::string>();
    m.objectives = j.at("objectives").get<std::vector<std::string>>();
    m.hyperparameters = j.at("hyperparameters").get<std::vector<std::string>>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.grid = j.at("grid").get<std::size_t>();
    m.invert_weights = j.at("invert_weights").get<bool>();
    m.raw_incumbent = j.at("raw_incumbent").get<bool>();
    return m;
}

inline nlohmann::json to_json(const WeightVector& w)
{
    return {{"w1", w.w1}, {"w2", w.w2}, {"source_index", w.source_index}};
}

inline WeightVector weight_from_json(const nlohmann::json& j)
{
    return {j.at("w1").get<double>(), j.at("w2").get<double>(), j.at("source_index").get<long>()};
}

inline void check_method(const nlohmann::json& j, const char* method)
{
    if (!j.is_object() || j.value("method", "") != method) {
        throw SchemaError(std::string("report: expected method '") + method + "'");
    }
    if (j.value("schema_version", 0) != kReportSchemaVersion) {
        throw SchemaError("report: unsupported schema_version");
    }
}

} // namespace detail

inline nlohmann::json to_json(const FanovaReport& r)
{
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : r.weights) {
        weights.push_back(detail::to_json(w));
    }
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : r.curves) {
        nlohmann::json imp = nlohmann::json::array(), sd = nlohmann::json::array(), deg = nlohmann::json::array();
        for (const auto& p : c.points) {
            imp.push_back(p.importance);
            sd.push_back(p.std);
            deg.push_back(p.degenerate);
        }
        curves.push_back({{"hyperparameter", c.hyperparameter}, {"importance", imp}, {"std", sd}, {"degenerate", deg}});
    }
    nlohmann::json j = {{"method", "mo-fanova"},
                        {"schema_version", kReportSchemaVersion},
                        {"weights", weights},
                        {"curves", curves},
                        {"forest_params", to_json(r.forest)},
                        {"seed", r.forest.seed},
                        {"metadata", detail::to_json(r.metadata)}};
    if (!r.pairwise.empty()) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& p : r.pairwise) {
            pairs.push_back({{"hyperparameters", {p.first, p.second}}, {"importance", p.importance}});
        }
        j["pairwise"] = pairs;
    }
    return j;
}

inline FanovaReport fanova_report_from_json(const nlohmann::json& j)
{
    detail::check_method(j, "mo-fanova");
    FanovaReport r;
    r.metadata = detail::metadata_from_json(j.at("metadata"));
    r.forest = forest_params_from_json(j.at("forest_params"));
    for (const auto& w : j.at("weights")) {
        r.weights.push_back(detail::weight_from_json(w));
    }
    for (const auto& c : j.at("curves")) {
        ImportanceCurve curve;
        curve.hyperparameter = c.at("hyperparameter").get<std::string>();
        const auto& imp = c.at("importance");
        if (imp.size() != r.weights.size()) {
            throw SchemaError("report: curve '" + curve.hyperparameter + "' does not match the weight grid");
        }
        for (std::size_t k = 0; k < imp.size(); ++k) {
            curve.points.push_back({r.weights[k].w1, imp[k].get<double>(), c.at("std")[k].get<double>(),
                                    c.at("degenerate")[k].get<bool>()});
        }
        r.curves.push_back(std::move(curve));
    }
    if (auto it = j.find("pairwise"); it != j.end()) {
        for (const auto& p : *it) {
            r.pairwise.push_back({p.at("hyperparameters")[0].get<std::string>(),
                                  p.at("hyperparameters")[1].get<std::string>(),
                                  p.at("importance").get<std::vector<double>>()});
        }
    }
    return r;
}

inline nlohmann::json to_json(const AblationReport& r)
{
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : r.paths) {
        weights.push_back(detail::to_json(p.weight));
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : p.steps) {
            steps.push_back({{"hyperparameter", s.hyperparameter},
                             {"new_value", detail::value_to_json(s.new_value)},
                             {"carried", s.carried},
                             {"delta", s.delta},
                             {"performance_after", s.performance_after}});
        }
        paths.push_back({{"w1", p.weight.w1},
                         {"w2", p.weight.w2},
                         {"source_index", p.weight.source_index},
                         {"incumbent_row", p.incumbent_index},
                         {"default_performance", p.default_performance},
                         {"incumbent_performance", p.incumbent_performance},
                         {"non_improving", p.non_improving},
                         {"steps", steps}});
    }
    return {{"method", "mo-ablation"},
            {"schema_version", kReportSchemaVersion},
            {"weights", weights},
            {"paths", paths},
            {"forest_params", to_json(r.forest)},
            {"seed", r.forest.seed},
            {"metadata", detail::to_json(r.metadata)}};
}

inline AblationReport ablation_report_from_json(const nlohmann::json& j)
{
    detail::check_method(j, "mo-ablation");
    AblationReport r;
    r.metadata = detail::metadata_from_json(j.at("metadata"));
    r.forest = forest_params_from_json(j.at("forest_params"));
    for (const auto& p : j.at("paths")) {
        AblationPath path;
        path.weight = {p.at("w1").get<double>(), p.at("w2").get<double>(), p.at("source_index").get<long>()};
        path.incumbent_index = p.at("incumbent_row").get<std::size_t>();
        path.default_performance = p.at("default_performance").get<double>();
        path.incumbent_performance = p.at("incumbent_performance").get<double>();
        path.non_improving = p.at("non_improving").get<bool>();
        for (const auto& s : p.at("steps")) {
            path.steps.push_back({s.at("hyperparameter").get<std::string>(),
                                  detail::value_from_json(s.at("new_value"), "report step"),
                                  s.at("carried").get<std::vector<std::string>>(), s.at("performance_after").get<double>(),
                                  s.at("delta").get<double>()});
        }
        r.paths.push_back(std::move(path));
    }
    return r;
}

inline std::string render_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline nlohmann::json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw IoError("error writing '" + path + "'");
    }
}

} // namespace mohpi
