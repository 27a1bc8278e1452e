#include <gtest/gtest.h>

#include <string>

#include "mohpi/report.hpp"
#include "mohpi/rng.hpp"
#include "mohpi/svg.hpp"

using namespace mohpi;

namespace {

std::size_t count(const std::string& s, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

ReportMetadata sample_metadata()
{
    ReportMetadata m;
    m.dataset = "runs.csv";
    m.space = "space.json";
    m.objectives = {"error", "cost"};
    m.hyperparameters = {"a", "b"};
    m.grid = 3;
    return m;
}

FanovaReport sample_fanova(Rng& rng)
{
    FanovaReport r;
    r.metadata = sample_metadata();
    r.forest.n_trees = 7;
    r.forest.max_depth = 4;
    r.forest.seed = 99;
    r.weights = {make_weight(0.0), make_weight(0.1, 12), make_weight(1.0 / 3.0)};
    for (const char* hp : {"a", "b"}) {
        ImportanceCurve c{hp, {}};
        for (const auto& w : r.weights) {
            c.points.push_back({w.w1, rng.uniform(), rng.uniform() * 0.1, rng.uniform() < 0.3});
        }
        r.curves.push_back(std::move(c));
    }
    r.pairwise.push_back({"a", "b", {rng.uniform(), rng.uniform(), rng.uniform()}});
    return r;
}

AblationPath path_with(double w1, double default_perf, std::vector<std::pair<std::string, double>> deltas)
{
    AblationPath p;
    p.weight = make_weight(w1);
    p.default_performance = default_perf;
    double perf = default_perf;
    for (const auto& [hp, d] : deltas) {
        perf -= d;
        p.steps.push_back({hp, Value(1.0), {}, perf, d});
    }
    p.incumbent_performance = perf;
    return p;
}

} // namespace

TEST(ReportJson, FanovaRoundTrip)
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = sample_fanova(rng);
        const auto text = render_json(to_json(r));
        const auto back = fanova_report_from_json(nlohmann::json::parse(text));
        EXPECT_EQ(back, r);
        EXPECT_EQ(render_json(to_json(back)), text);
    }
}

TEST(ReportJson, FanovaRequiredKeys)
{
    Rng rng(6);
    const auto j = to_json(sample_fanova(rng));
    for (const char* key : {"method", "weights", "curves", "forest_params", "seed", "metadata"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["method"], "mo-fanova");
    EXPECT_EQ(j["seed"], 99);
    EXPECT_EQ(j["curves"][0]["importance"].size(), 3u);
}

TEST(ReportJson, AblationRoundTrip)
{
    AblationReport r;
    r.metadata = sample_metadata();
    r.metadata.raw_incumbent = true;
    r.forest.seed = 3;
    r.paths.push_back(path_with(0.0, 0.8, {{"a", 0.3}, {"b", -0.05}}));
    r.paths.back().steps[0].new_value = Value(std::string("relu"));
    r.paths.back().steps[0].carried = {"b"};
    r.paths.push_back(path_with(1.0, 0.5, {}));
    r.paths.back().incumbent_index = 17;
    r.paths.back().weight.source_index = 4;
    const auto text = render_json(to_json(r));
    const auto back = ablation_report_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back, r);
    EXPECT_EQ(render_json(to_json(back)), text);
}

TEST(ReportJson, SchemaErrors)
{
    Rng rng(7);
    auto j = to_json(sample_fanova(rng));
    EXPECT_THROW(ablation_report_from_json(j), SchemaError);
    auto bad_version = j;
    bad_version["schema_version"] = 99;
    EXPECT_THROW(fanova_report_from_json(bad_version), SchemaError);
    auto short_curve = j;
    short_curve["curves"][0]["importance"].erase(0);
    EXPECT_THROW(fanova_report_from_json(short_curve), SchemaError);
    EXPECT_THROW(fanova_report_from_json(nlohmann::json::array()), SchemaError);
}

TEST(FanovaSvg, DeterministicWithOneEntryPerHyperparameter)
{
    std::vector<ImportanceCurve> curves;
    for (int i = 0; i < 8; ++i) {
        ImportanceCurve c{"hp" + std::to_string(i), {}};
        for (int k = 0; k <= 4; ++k) {
            c.points.push_back({k / 4.0, 0.1 * i, 0.0, false});
        }
        curves.push_back(std::move(c));
    }
    const auto svg = render_fanova_svg(curves);
    EXPECT_EQ(svg, render_fanova_svg(curves));
    EXPECT_EQ(count(svg, "<polyline"), 8u);
    EXPECT_EQ(count(svg, "<rect"), 8u + 1u); // legend swatches plus background
    for (int i = 0; i < 8; ++i) {
        EXPECT_NE(svg.find(">hp" + std::to_string(i) + "<"), std::string::npos);
    }
    EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(FanovaSvg, FlatCurveIsHorizontal)
{
    ImportanceCurve c{"a", {{0.0, 0.4, 0.0, false}, {0.5, 0.4, 0.0, false}, {1.0, 0.4, 0.0, false}}};
    const auto svg = render_fanova_svg({c});
    const auto start = svg.find("points=\"") + 8;
    const auto pts = svg.substr(start, svg.find('"', start) - start);
    std::vector<std::string> ys;
    for (std::size_t pos = 0; pos < pts.size();) {
        auto end = pts.find(' ', pos);
        if (end == std::string::npos) {
            end = pts.size();
        }
        const auto pair = pts.substr(pos, end - pos);
        ys.push_back(pair.substr(pair.find(',') + 1));
        pos = end + 1;
    }
    ASSERT_EQ(ys.size(), 3u);
    EXPECT_EQ(ys[0], ys[1]);
    EXPECT_EQ(ys[1], ys[2]);
}

TEST(AblationStackData, AllZeroDeltasLeaveOnlyTheBase)
{
    const std::vector<AblationPath> paths{path_with(0.0, 0.6, {{"a", 0.0}}), path_with(1.0, 0.4, {{"a", 0.0}})};
    const auto st = ablation_stack(paths, {"a", "b"});
    EXPECT_TRUE(st.bands.empty());
    EXPECT_TRUE(st.negatives.empty());
    EXPECT_EQ(st.base, (std::vector<double>{0.4, 0.6}));
    EXPECT_EQ(st.top(), st.base);
    const auto svg = render_ablation_svg(paths, {"a", "b"});
    EXPECT_EQ(count(svg, "<polygon"), 1u);
}

TEST(AblationStackData, TopEqualsIncumbentPerformance)
{
    const std::vector<AblationPath> paths{path_with(0.5, 0.8, {{"b", 0.3}})};
    const auto st = ablation_stack(paths, {"a", "b"});
    ASSERT_EQ(st.bands.size(), 1u);
    EXPECT_EQ(st.bands[0].hyperparameter, "b");
    EXPECT_NEAR(st.top()[0], 1.0 - paths[0].incumbent_performance, 1e-12);
    EXPECT_NEAR(st.top()[0], 0.5, 1e-12);
    const auto svg = render_ablation_svg(paths, {"a", "b"});
    EXPECT_EQ(count(svg, "<polygon"), 0u);
    EXPECT_NE(svg.find(">b<"), std::string::npos);
}

TEST(AblationStackData, NegativeDeltasAreListedNotStacked)
{
    const std::vector<AblationPath> paths{path_with(0.0, 0.8, {{"a", 0.3}, {"b", -0.05}}),
                                          path_with(1.0, 0.7, {{"b", 0.2}})};
    const auto st = ablation_stack(paths, {"a", "b"});
    ASSERT_EQ(st.bands.size(), 2u);
    EXPECT_EQ(st.bands[1].values, (std::vector<double>{0.0, 0.2}));
    ASSERT_EQ(st.negatives.size(), 1u);
    EXPECT_EQ(st.negatives[0].hyperparameter, "b");
    EXPECT_EQ(st.negatives[0].delta, -0.05);
    EXPECT_NEAR(st.top()[0], 0.5, 1e-12);
    const auto svg = render_ablation_svg(paths, {"a", "b"});
    EXPECT_NE(svg.find("Negative deltas"), std::string::npos);
    EXPECT_NE(svg.find("w1=0.00 b -0.0500"), std::string::npos);
    EXPECT_EQ(svg, render_ablation_svg(paths, {"a", "b"}));
}
