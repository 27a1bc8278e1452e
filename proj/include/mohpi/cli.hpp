#pragma once

// Command-line surface. Kept in a header so tests can drive the exact code
// path of the `mohpi` binary in-process.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mohpi/ablation.hpp"
#include "mohpi/configspace.hpp"
#include "mohpi/dataset.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/fanova.hpp"
#include "mohpi/pareto.hpp"
#include "mohpi/report.hpp"
#include "mohpi/svg.hpp"
#include "mohpi/synthetic.hpp"

namespace mohpi {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t trees = 100;
    std::size_t mtry = 0;
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> max_depth;
    bool no_bootstrap = false;
    std::size_t grid = 0;
    bool invert_weights = false;
    bool pairwise = false;
    bool raw_incumbent = false;
    std::string dump_surrogate;

    ForestParams forest(std::size_t d) const
    {
        ForestParams p;
        p.n_trees = trees;
        p.mtry = mtry;
        p.mtry = p.resolved_mtry(d);
        p.min_samples_leaf = min_samples_leaf;
        p.max_depth = max_depth;
        p.bootstrap = !no_bootstrap;
        p.seed = seed;
        return p;
    }
};

inline std::vector<std::string> split_names(const std::string& list)
{
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(csv::trim(item));
    }
    return out;
}

inline std::vector<std::string> two_objectives(const std::string& list)
{
    auto names = split_names(list);
    if (names.size() != 2 || names[0].empty() || names[1].empty()) {
        throw InvalidArgumentError("--objectives must name exactly two columns, e.g. --objectives error,cost");
    }
    return names;
}

inline std::vector<Point2> normalized_points(const MetaDataset& ds)
{
    const auto o1 = ds.normalized(0);
    const auto o2 = ds.normalized(1);
    std::vector<Point2> pts(ds.n());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i] = {o1[i], o2[i]};
    }
    return pts;
}

// Pareto-derived weights (optionally swapped), plus an optional uniform grid.
inline std::vector<WeightVector> analysis_weights(const MetaDataset& ds, std::size_t grid, bool invert)
{
    const auto pts = normalized_points(ds);
    const auto idx = pareto_indices(pts);
    std::vector<Point2> front;
    for (auto i : idx) {
        front.push_back(pts[i]);
    }
    auto weights = derive_weights(front, idx);
    if (invert) {
        weights = invert_weights(std::move(weights));
    }
    if (grid > 0) {
        weights = merge_weights(std::move(weights), grid_weights(grid));
    }
    return weights;
}

namespace detail {

inline void print_warnings(const MetaDataset& ds, std::ostream& err)
{
    for (const auto& w : ds.warnings()) {
        err << "warning: " << w << "\n";
    }
}

inline int cmd_generate(const GlobalOptions& g, const std::string& problem_path, std::size_t n, const std::string& out,
                        const std::string& space_out, std::ostream& os)
{
    const auto problem = load_problem(problem_path);
    const auto ds = sample_runs(problem, n, g.seed);
    save_csv(ds, out);
    if (!space_out.empty()) {
        write_text_file(space_out, render_json(problem_space_json(problem)));
    }
    os << "wrote " << ds.n() << " runs to " << out << "\n";
    return kExitOk;
}

inline int cmd_pareto(const GlobalOptions& g, const std::string& space_path, const std::string& data_path,
                      const std::string& objectives, const std::string& out, std::ostream& os, std::ostream& err)
{
    const auto names = two_objectives(objectives);
    const auto space = load_space(space_path);
    const auto ds = load_csv(data_path, space, names);
    print_warnings(ds, err);
    const auto pts = normalized_points(ds);
    const auto idx = pareto_indices(pts);
    nlohmann::json rows = nlohmann::json::array();
    for (auto i : idx) {
        rows.push_back({{"row", i},
                        {"objectives", {ds.objective(0).raw[i], ds.objective(1).raw[i]}},
                        {"normalized", {pts[i][0], pts[i][1]}}});
    }
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : analysis_weights(ds, g.grid, g.invert_weights)) {
        weights.push_back({{"w1", w.w1}, {"w2", w.w2}, {"source_index", w.source_index}});
    }
    const nlohmann::json doc = {{"objectives", names}, {"efficient", rows}, {"weights", weights}};
    if (out.empty()) {
        os << render_json(doc);
    } else {
        write_text_file(out, render_json(doc));
    }
    return kExitOk;
}

inline int cmd_analyze(const GlobalOptions& g, const std::string& space_path, const std::string& data_path,
                       const std::string& objectives, const std::string& method, const std::string& out,
                       bool no_svg, std::ostream& os, std::ostream& err)
{
    if (method != "fanova" && method != "ablation") {
        throw InvalidArgumentError("--method must be 'fanova' or 'ablation'");
    }
    const auto names = two_objectives(objectives);
    const auto space = load_space(space_path);
    const auto ds = load_csv(data_path, space, names);
    print_warnings(ds, err);

    ReportMetadata meta;
    meta.dataset = data_path;
    meta.space = space.name();
    meta.objectives = names;
    for (const auto& spec : space.specs()) {
        meta.hyperparameters.push_back(spec.name);
    }
    meta.grid = g.grid;
    meta.invert_weights = g.invert_weights;
    meta.raw_incumbent = g.raw_incumbent;
    const auto forest = g.forest(space.size());
    const auto weights = analysis_weights(ds, g.grid, g.invert_weights);

    std::string json_text;
    std::string svg_text;
    if (method == "fanova") {
        FanovaOptions opts;
        opts.forest = forest;
        opts.pairwise = g.pairwise;
        opts.weights = weights;
        if (!g.dump_surrogate.empty()) {
            opts.on_forest = [&](std::size_t k, const WeightVector&, const Forest& f) {
                save_forest(f, g.dump_surrogate + "_w" + std::to_string(k) + ".json");
            };
        }
        const auto result = mo_fanova(ds, opts);
        FanovaReport report{meta, forest, result.weights, result.curves, result.pairwise};
        json_text = render_json(to_json(report));
        svg_text = render_fanova_svg(report.curves, names[0]);
    } else {
        AblationOptions opts;
        opts.forest = forest;
        opts.weights = weights;
        opts.raw_incumbent = g.raw_incumbent;
        if (!g.dump_surrogate.empty()) {
            opts.on_surrogates = [&](const ObjectiveSurrogates& s) {
                save_forest(s.s1, g.dump_surrogate + "_obj1.json");
                save_forest(s.s2, g.dump_surrogate + "_obj2.json");
            };
        }
        AblationReport report{meta, forest, mo_ablation(ds, opts)};
        json_text = render_json(to_json(report));
        svg_text = render_ablation_svg(report.paths, meta.hyperparameters, names[0]);
    }
    write_text_file(out + ".json", json_text);
    os << "wrote " << out << ".json";
    if (!no_svg) {
        write_text_file(out + ".svg", svg_text);
        os << " and " << out << ".svg";
    }
    os << " (" << weights.size() << " weightings)\n";
    return kExitOk;
}

inline int cmd_plot(const std::string& report_path, const std::string& out, std::ostream& os)
{
    const auto j = read_json_file(report_path);
    const std::string method = j.is_object() ? j.value("method", "") : "";
    std::string svg_text;
    if (method == "mo-fanova") {
        const auto r = fanova_report_from_json(j);
        svg_text = render_fanova_svg(r.curves, r.metadata.objectives.empty() ? "w1" : r.metadata.objectives[0]);
    } else if (method == "mo-ablation") {
        const auto r = ablation_report_from_json(j);
        svg_text = render_ablation_svg(r.paths, r.metadata.hyperparameters,
                                       r.metadata.objectives.empty() ? "w1" : r.metadata.objectives[0]);
    } else {
        throw SchemaError("report: unknown method '" + method + "'");
    }
    write_text_file(out, svg_text);
    os << "wrote " << out << "\n";
    return kExitOk;
}

inline int cmd_dp_loss(const std::string& data_path, const std::string& pred, const std::string& sensitive,
                       bool shared_n, std::ostream& os)
{
    std::ifstream in(data_path);
    if (!in) {
        throw IoError("cannot open '" + data_path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("'" + data_path + "' is empty");
    }
    const auto header = csv::split_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (csv::trim(header[i]) == name) {
                return i;
            }
        }
        throw MissingColumnError("missing column '" + name + "'");
    };
    const std::size_t cp = column(pred);
    const std::size_t cs = column(sensitive);
    std::vector<int> p, s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        auto bit = [&](std::size_t c) {
            const std::string v = c < fields.size() ? csv::trim(fields[c]) : "";
            if (v != "0" && v != "1") {
                throw ParseError("line " + std::to_string(line_no) + ": expected 0 or 1, got '" + v + "'");
            }
            return v == "1" ? 1 : 0;
        };
        p.push_back(bit(cp));
        s.push_back(bit(cs));
    }
    const double loss = shared_n ? dp_loss_shared_n(p, s) : dp_loss(p, s);
    os << nlohmann::json({{"dp_loss", loss}, {"shared_n", shared_n}}).dump() << "\n";
    return kExitOk;
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Hyperparameter importance for bi-objective HPO runs", "mohpi"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
    app.add_option("--trees", g.trees, "Trees per random-forest surrogate")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--mtry", g.mtry, "Features per split (0: max(1, d/3))")->capture_default_str();
    app.add_option("--min-samples-leaf", g.min_samples_leaf, "Minimum samples per leaf")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--max-depth", g.max_depth, "Maximum tree depth (default unlimited)");
    app.add_flag("--no-bootstrap", g.no_bootstrap, "Fit every tree on the full data");
    app.add_option("--grid", g.grid, "Add k evenly spaced weights on [0,1]")->capture_default_str();
    app.add_flag("--invert-weights", g.invert_weights, "Swap (w1, w2) of the Pareto-derived weights");
    app.add_flag("--pairwise", g.pairwise, "Also compute pairwise fANOVA importances");
    app.add_flag("--raw-incumbent", g.raw_incumbent, "Pick incumbents on raw instead of normalized objectives");
    app.add_option("--dump-surrogate", g.dump_surrogate, "Write fitted surrogates as JSON using this path prefix");

    auto* generate = app.add_subcommand("generate", "Sample a synthetic problem into a meta-dataset CSV")->fallthrough();
    std::string problem, gen_out, space_out;
    std::size_t n = 1000;
    generate->add_option("--problem", problem, "Problem spec JSON")->required();
    generate->add_option("--n", n, "Number of sampled configurations")->capture_default_str();
    generate->add_option("--out", gen_out, "Output CSV")->required();
    generate->add_option("--space-out", space_out, "Also write the problem's config space JSON");

    auto* pareto = app.add_subcommand("pareto", "Print Pareto-efficient rows and derived weights")->fallthrough();
    std::string p_space, p_data, p_obj, p_out;
    pareto->add_option("--space", p_space, "Config space JSON")->required();
    pareto->add_option("--data", p_data, "Meta-dataset CSV")->required();
    pareto->add_option("--objectives", p_obj, "Two objective columns, e.g. error,cost")->required();
    pareto->add_option("--out", p_out, "Write JSON here instead of stdout");

    auto* analyze = app.add_subcommand("analyze", "Run MO-fANOVA or MO-ablation")->fallthrough();
    std::string a_space, a_data, a_obj, a_method, a_out;
    bool no_svg = false;
    analyze->add_option("--space", a_space, "Config space JSON")->required();
    analyze->add_option("--data", a_data, "Meta-dataset CSV")->required();
    analyze->add_option("--objectives", a_obj, "Two objective columns, e.g. error,cost")->required();
    analyze->add_option("--method", a_method, "fanova or ablation")->required();
    analyze->add_option("--out", a_out, "Output prefix (<out>.json, <out>.svg)")->required();
    analyze->add_flag("--no-svg", no_svg, "Skip the SVG chart");

    auto* plot = app.add_subcommand("plot", "Re-render the SVG of an existing JSON report")->fallthrough();
    std::string r_in, r_out;
    plot->add_option("--report", r_in, "Report JSON")->required();
    plot->add_option("--out", r_out, "Output SVG")->required();

    auto* dp = app.add_subcommand("dp-loss", "Demographic-parity loss of binary predictions")->fallthrough();
    std::string d_data, d_pred, d_sens;
    bool shared_n = false;
    dp->add_option("--data", d_data, "CSV with prediction and sensitive columns")->required();
    dp->add_option("--pred", d_pred, "Prediction column (0/1)")->required();
    dp->add_option("--sensitive", d_sens, "Sensitive attribute column (0/1)")->required();
    dp->add_flag("--dp-shared-n", shared_n, "Divide both group sums by the total count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*generate) {
            return detail::cmd_generate(g, problem, n, gen_out, space_out, out);
        }
        if (*pareto) {
            return detail::cmd_pareto(g, p_space, p_data, p_obj, p_out, out, err);
        }
        if (*analyze) {
            return detail::cmd_analyze(g, a_space, a_data, a_obj, a_method, a_out, no_svg, out, err);
        }
        if (*plot) {
            return detail::cmd_plot(r_in, r_out, out);
        }
        if (*dp) {
            return detail::cmd_dp_loss(d_data, d_pred, d_sens, shared_n, out);
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON document: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    std::vector<const char*> argv{"mohpi"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace mohpi
