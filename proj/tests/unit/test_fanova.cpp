#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "mohpi/fanova.hpp"
#include "mohpi/synthetic.hpp"
#include "oracles/oracles.hpp"

using namespace mohpi;

namespace {

const std::string kData = MOHPI_DATA_DIR;
const std::vector<Interval> kUnit2{{0, 1}, {0, 1}};

TreeNode leaf(double v) { return {-1, 0.0, -1, -1, v}; }
TreeNode split(int f, double t, int l, int r) { return {f, t, l, r, 0.0}; }

RegressionTree step_x1() { return RegressionTree({split(0, 0.5, 1, 2), leaf(0.0), leaf(1.0)}); }

// value = 1 iff exactly one of x1 > 0.5, x2 > 0.5
RegressionTree xor_tree()
{
    return RegressionTree({split(0, 0.5, 1, 2), split(1, 0.5, 3, 4), split(1, 0.5, 5, 6), leaf(0), leaf(1), leaf(1),
                           leaf(0)});
}

// value = 2 * [x1 > 0.3] + [x2 > 0.6]
RegressionTree additive_tree()
{
    return RegressionTree({split(0, 0.3, 1, 2), split(1, 0.6, 3, 4), split(1, 0.6, 5, 6), leaf(0), leaf(1), leaf(2),
                           leaf(3)});
}

// Pure interaction share of (i, j) on the midpoint grid of [0,1]^d, evaluated
// point by point with predict.
double grid_pairwise(const RegressionTree& tree, std::size_t d, std::size_t i, std::size_t j)
{
    const int G = oracle::kGrid;
    std::vector<std::vector<double>> joint(G, std::vector<double>(G, 0.0));
    std::vector<double> mi(G, 0.0), mj(G, 0.0);
    std::vector<double> x(d);
    std::size_t others = 1;
    for (std::size_t k = 0; k < d; ++k) {
        if (k != i && k != j) {
            others *= G;
        }
    }
    for (int p = 0; p < G; ++p) {
        for (int q = 0; q < G; ++q) {
            double sum = 0.0;
            for (std::size_t o = 0; o < others; ++o) {
                std::size_t rest = o;
                for (std::size_t k = 0; k < d; ++k) {
                    if (k == i) {
                        x[k] = (p + 0.5) / G;
                    } else if (k == j) {
                        x[k] = (q + 0.5) / G;
                    } else {
                        x[k] = (static_cast<double>(rest % G) + 0.5) / G;
                        rest /= G;
                    }
                }
                sum += tree.predict(x);
            }
            joint[p][q] = sum / static_cast<double>(others);
        }
    }
    double mean = 0.0;
    for (int p = 0; p < G; ++p) {
        for (int q = 0; q < G; ++q) {
            mi[p] += joint[p][q] / G;
            mj[q] += joint[p][q] / G;
            mean += joint[p][q] / (G * G);
        }
    }
    const auto ref = oracle::grid_anova(tree, d);
    if (!(ref.variance > 1e-24)) {
        return 0.0;
    }
    double v = 0.0;
    for (int p = 0; p < G; ++p) {
        for (int q = 0; q < G; ++q) {
            const double f = joint[p][q] - mi[p] - mj[q] + mean;
            v += f * f / (G * G);
        }
    }
    return v / ref.variance;
}

} // namespace

TEST(Scalarize, Examples)
{
    const std::vector<double> o1{0.2, 0.0, 1.0}, o2{0.6, 1.0, 0.3};
    EXPECT_DOUBLE_EQ(scalarize(o1, o2, make_weight(0.5))[0], 0.4);
    EXPECT_EQ(scalarize(o1, o2, make_weight(1.0)), o1);
    EXPECT_EQ(scalarize(o1, o2, make_weight(0.0)), o2);
}

TEST(TreeMarginal, StepTreeExamples)
{
    const auto t = step_x1();
    const std::size_t d1[] = {0}, d2[] = {1};
    const double at25[] = {0.25}, at75[] = {0.75};
    EXPECT_EQ(tree_marginal(t, kUnit2, d1, at25), 0.0);
    EXPECT_EQ(tree_marginal(t, kUnit2, d1, at75), 1.0);
    for (double v : {0.0, 0.3, 0.5, 1.0}) {
        const double at[] = {v};
        EXPECT_DOUBLE_EQ(tree_marginal(t, kUnit2, d2, at), 0.5);
    }
}

TEST(TreeMarginal, RandomTreeMatchesGridIntegration)
{
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = oracle::random_tree(rng, 2, 8);
        for (int g = 0; g < 10; ++g) {
            const double v = (20.0 * g + 7.5) / oracle::kGrid;
            double integral = 0.0;
            for (int k = 0; k < oracle::kGrid; ++k) {
                integral += t.predict(std::vector<double>{v, (k + 0.5) / oracle::kGrid}) / oracle::kGrid;
            }
            const std::size_t dims[] = {0};
            const double at[] = {v};
            EXPECT_NEAR(tree_marginal(t, kUnit2, dims, at), integral, 1e-9);
        }
    }
}

TEST(TreeMarginal, JointDimensions)
{
    const auto t = xor_tree();
    const std::size_t dims[] = {0, 1};
    const double at[] = {0.2, 0.9};
    EXPECT_EQ(tree_marginal(t, kUnit2, dims, at), 1.0);
    EXPECT_THROW(tree_marginal(t, kUnit2, std::vector<std::size_t>{}, std::vector<double>{}), ShapeMismatchError);
}

TEST(TreeImportance, SingleLeafIsDegenerate)
{
    const RegressionTree t({leaf(3.0)});
    const auto imp = tree_importance(t, kUnit2, 0);
    EXPECT_EQ(imp.fraction, 0.0);
    EXPECT_EQ(imp.total_variance, 0.0);
    EXPECT_TRUE(imp.degenerate);
}

TEST(TreeImportance, StepFunctionInOneDimension)
{
    const auto t = step_x1();
    EXPECT_NEAR(tree_importance(t, kUnit2, 0).fraction, 1.0, 1e-12);
    EXPECT_NEAR(tree_importance(t, kUnit2, 1).fraction, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(tree_importance(t, kUnit2, 0).total_variance, 0.25);
}

TEST(TreeImportance, AdditiveHandBuiltTree)
{
    // Var(2 * Bernoulli(0.7)) = 4 * 0.21, Var(Bernoulli(0.4)) = 0.24
    const auto t = additive_tree();
    const double total = 0.84 + 0.24;
    EXPECT_NEAR(tree_importance(t, kUnit2, 0).fraction, 0.84 / total, 1e-12);
    EXPECT_NEAR(tree_importance(t, kUnit2, 1).fraction, 0.24 / total, 1e-12);
}

TEST(TreeImportance, TreeFitOfAdditiveFunctionOnAFineGrid)
{
    const std::size_t g = 60;
    Matrix X(g * g, 2);
    std::vector<double> y(g * g);
    for (std::size_t a = 0; a < g; ++a) {
        for (std::size_t b = 0; b < g; ++b) {
            const std::size_t r = a * g + b;
            X(r, 0) = (a + 0.5) / g;
            X(r, 1) = (b + 0.5) / g;
            y[r] = 3.0 * X(r, 0) + X(r, 1);
        }
    }
    ForestParams p;
    p.n_trees = 1;
    p.mtry = 2;
    p.bootstrap = false;
    const auto f = fit(X, y, p, kUnit2);
    EXPECT_NEAR(tree_importance(f.trees()[0], kUnit2, 0).fraction, 0.9, 0.05);
    EXPECT_NEAR(tree_importance(f.trees()[0], kUnit2, 1).fraction, 0.1, 0.05);
}

TEST(TreeImportance, MatchesGridOracleOnRandomTrees)
{
    Rng rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d = 1 + rng.below(4);
        const auto t = oracle::random_tree(rng, d, 1 + rng.below(32));
        const std::vector<Interval> unit(d, Interval{0, 1});
        const auto ref = oracle::grid_anova(t, d);
        const auto dec = decompose_tree(t, unit);
        EXPECT_NEAR(dec.mean, ref.mean, 1e-12);
        EXPECT_NEAR(dec.total_variance, ref.variance, 1e-9 * (1.0 + ref.variance));
        for (std::size_t j = 0; j < d; ++j) {
            EXPECT_NEAR(dec.fractions[j], ref.fractions[j], 1e-9);
        }
    }
}

TEST(TreeImportance, MonteCarloAgreesOnANonUnitDomain)
{
    // Domain [-1, 1] x [0, 1]: compare the exact variance with a sample estimate.
    Rng rng(23);
    const auto t = oracle::random_tree(rng, 2, 10);
    const std::vector<Interval> domain{{-1, 1}, {0, 1}};
    const auto dec = decompose_tree(t, domain);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < n; ++s) {
        const double v = t.predict(std::vector<double>{-1.0 + 2.0 * rng.uniform(), rng.uniform()});
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    EXPECT_NEAR(dec.mean, mean, 5.0 * std::sqrt(var / n));
    EXPECT_NEAR(dec.total_variance, var, 0.03 * var);
    EXPECT_NEAR(dec.unit_measure, 1.0, 1e-12);
}

TEST(TreeImportance, MainVariancesAgreeWithPickFreezeMonteCarlo)
{
    // 10^6 draws per tree. V_i = E[(f(x) - mu)(f(x') - mu)] where x' keeps
    // x_i and redraws every other coordinate; each estimate is a plain mean,
    // so its standard error is the sample sd over sqrt(n).
    Rng rng(31);
    const int n = 1000000;
    auto within_3se = [n](const std::vector<double>& samples, double exact) {
        double s = 0.0, s2 = 0.0;
        for (double v : samples) {
            s += v;
            s2 += v * v;
        }
        const double m = s / n;
        const double se = std::sqrt(std::max(0.0, s2 / n - m * m) / n);
        return std::abs(m - exact) <= 3.0 * se + 1e-12;
    };
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t d = 2 + rng.below(3);
        const auto t = oracle::random_tree(rng, d, 8 + rng.below(20));
        const std::vector<Interval> unit(d, Interval{0, 1});
        const auto dec = decompose_tree(t, unit);
        std::vector<double> ys(n), sq(n);
        std::vector<std::vector<double>> prod(d, std::vector<double>(n));
        std::vector<double> x(d), xp(d);
        for (int s = 0; s < n; ++s) {
            for (auto& v : x) {
                v = rng.uniform();
            }
            const double y = t.predict(x) - dec.mean;
            ys[s] = y + dec.mean;
            sq[s] = y * y;
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    xp[j] = j == i ? x[j] : rng.uniform();
                }
                prod[i][s] = y * (t.predict(xp) - dec.mean);
            }
        }
        EXPECT_TRUE(within_3se(ys, dec.mean)) << "trial " << trial;
        EXPECT_TRUE(within_3se(sq, dec.total_variance)) << "trial " << trial;
        for (std::size_t i = 0; i < d; ++i) {
            EXPECT_TRUE(within_3se(prod[i], dec.main_variance[i])) << "trial " << trial << " dim " << i;
        }
    }
}

TEST(TreeImportanceProperty, InvariantToAffineLeafRescaling)
{
    Rng rng(24);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 1 + rng.below(4);
        const auto t = oracle::random_tree(rng, d, 2 + rng.below(20));
        auto nodes = t.nodes();
        const double a = 0.1 + 10.0 * rng.uniform(), b = rng.normal() * 100.0;
        for (auto& n : nodes) {
            n.value = a * n.value + b;
        }
        const RegressionTree scaled(nodes);
        const std::vector<Interval> unit(d, Interval{0, 1});
        const auto x = decompose_tree(t, unit);
        const auto y = decompose_tree(scaled, unit);
        for (std::size_t j = 0; j < d; ++j) {
            EXPECT_NEAR(x.fractions[j], y.fractions[j], 1e-12);
        }
    }
}

TEST(TreeMarginalProperty, IntegratesToTheTreeMean)
{
    // The single-dimension marginal is constant between consecutive
    // thresholds on that dimension, so a midpoint sum over those pieces is
    // its exact integral.
    Rng rng(27);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + rng.below(4);
        const auto t = oracle::random_tree(rng, d, 2 + rng.below(30));
        const std::vector<Interval> unit(d, Interval{0, 1});
        const double mean = decompose_tree(t, unit).mean;
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> cuts{0.0, 1.0};
            for (const auto& node : t.nodes()) {
                if (!node.is_leaf() && static_cast<std::size_t>(node.feature) == j && node.threshold > 0.0 &&
                    node.threshold < 1.0) {
                    cuts.push_back(node.threshold);
                }
            }
            std::sort(cuts.begin(), cuts.end());
            double integral = 0.0;
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
                const std::size_t dims[] = {j};
                const double at[] = {(cuts[k] + cuts[k + 1]) / 2.0};
                integral += (cuts[k + 1] - cuts[k]) * tree_marginal(t, unit, dims, at);
            }
            EXPECT_NEAR(integral, mean, 1e-9) << "trial " << trial << " dim " << j;
        }
    }
}

TEST(TreeImportanceProperty, UnitMeasureAndFractionBudget)
{
    Rng rng(25);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + rng.below(5);
        const auto t = oracle::random_tree(rng, d, 1 + rng.below(40));
        std::vector<Interval> domain(d);
        for (auto& iv : domain) {
            iv = rng.below(2) == 0 ? Interval{0, 1} : Interval{-1, 1};
        }
        const auto dec = decompose_tree(t, domain);
        EXPECT_NEAR(dec.unit_measure, 1.0, 1e-9);
        double sum = 0.0;
        for (double f : dec.fractions) {
            EXPECT_GE(f, 0.0);
            sum += f;
        }
        EXPECT_LE(sum, 1.0 + 1e-9);
    }
}

TEST(PairwiseImportance, Examples)
{
    EXPECT_NEAR(pairwise_importance(additive_tree(), kUnit2, 0, 1), 0.0, 1e-12);
    const auto x = xor_tree();
    EXPECT_NEAR(tree_importance(x, kUnit2, 0).fraction, 0.0, 1e-12);
    EXPECT_NEAR(tree_importance(x, kUnit2, 1).fraction, 0.0, 1e-12);
    EXPECT_NEAR(pairwise_importance(x, kUnit2, 0, 1), 1.0, 1e-12);
    EXPECT_EQ(pairwise_importance(RegressionTree({leaf(1.0)}), kUnit2, 0, 1), 0.0);
    EXPECT_THROW(pairwise_importance(x, kUnit2, 1, 1), InvalidArgumentError);
}

TEST(PairwiseImportanceProperty, TwoDimensionalDecompositionIsComplete)
{
    Rng rng(26);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = oracle::random_tree(rng, 2, 2 + rng.below(25));
        const auto dec = decompose_tree(t, kUnit2);
        if (dec.degenerate) {
            continue;
        }
        const double total = dec.fractions[0] + dec.fractions[1] + pairwise_importance(t, kUnit2, 0, 1);
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(PairwiseImportanceProperty, MatchesGridOracleInThreeDimensions)
{
    Rng rng(27);
    const std::vector<Interval> unit(3, Interval{0, 1});
    for (int trial = 0; trial < 3; ++trial) {
        const auto t = oracle::random_tree(rng, 3, 12);
        for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {1, 2}}) {
            EXPECT_NEAR(pairwise_importance(t, unit, i, j), grid_pairwise(t, 3, i, j), 1e-9);
        }
    }
}

TEST(ForestImportance, IdenticalTreesHaveZeroSpread)
{
    const Forest f({additive_tree(), additive_tree(), additive_tree()}, {}, kUnit2);
    const auto imp = forest_importance(f);
    EXPECT_NEAR(imp.mean[0], 0.84 / 1.08, 1e-12);
    EXPECT_EQ(imp.std[0], 0.0);
    EXPECT_EQ(imp.std[1], 0.0);
    EXPECT_FALSE(imp.degenerate);
}

TEST(ForestImportance, DegenerateTreesAreExcluded)
{
    const Forest mixed({step_x1(), RegressionTree({leaf(2.0)})}, {}, kUnit2);
    const auto imp = forest_importance(mixed);
    EXPECT_EQ(imp.degenerate_trees, 1u);
    EXPECT_NEAR(imp.mean[0], 1.0, 1e-12);

    Matrix X(30, 2);
    for (std::size_t r = 0; r < 30; ++r) {
        X(r, 0) = r / 30.0;
        X(r, 1) = 1.0 - r / 30.0;
    }
    ForestParams p;
    p.n_trees = 8;
    const auto constant = fanova(X, std::vector<double>(30, 0.7), p, kUnit2, true);
    EXPECT_TRUE(constant.degenerate);
    EXPECT_EQ(constant.mean, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(constant.pairwise_mean, (std::vector<double>{0.0}));
}

TEST(ForestImportance, AdditiveDataRecoversTheVarianceSplit)
{
    const auto problem = load_problem(kData + "/problems/additive.json");
    const auto ds = sample_runs(problem, 2000, 1);
    ForestParams p;
    p.n_trees = 100;
    p.seed = 1;
    const auto imp = fanova(ds.X(), ds.objective(0).raw, p, ds.space().domain());
    EXPECT_NEAR(imp.mean[0], 0.9, 0.1);
    EXPECT_NEAR(imp.mean[1], 0.1, 0.1);
}

TEST(MoFanova, WeightOneZeroIsSingleObjectiveFanova)
{
    const auto problem = load_problem(kData + "/problems/separable.json");
    const auto ds = sample_runs(problem, 300, 2);
    FanovaOptions opts;
    opts.forest.n_trees = 20;
    opts.forest.seed = 17;
    opts.weights = {make_weight(1.0)};
    const auto r = mo_fanova(ds, opts);
    const auto single = fanova(ds.X(), ds.normalized(0), opts.forest, ds.space().domain());
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_EQ(r.curves[j].points[0].importance, single.mean[j]);
        EXPECT_EQ(r.curves[j].points[0].std, single.std[j]);
    }
}

TEST(MoFanova, SeparableCurvesMirror)
{
    const auto problem = load_problem(kData + "/problems/separable.json");
    const auto ds = sample_runs(problem, 600, 3);
    FanovaOptions opts;
    opts.forest.n_trees = 30;
    opts.forest.seed = 3;
    opts.weights = grid_weights(5);
    opts.pairwise = true;
    std::size_t seen = 0;
    opts.on_forest = [&](std::size_t k, const WeightVector& w, const Forest& f) {
        EXPECT_EQ(w, opts.weights[k]);
        EXPECT_EQ(f.params().seed, weight_seed(3, k));
        ++seen;
    };
    const auto r = mo_fanova(ds, opts);
    EXPECT_EQ(seen, 5u);
    ASSERT_EQ(r.curves.size(), 2u);
    EXPECT_EQ(r.curves[0].hyperparameter, "x1");
    const auto& a = r.curves[0].points;
    const auto& b = r.curves[1].points;
    ASSERT_EQ(a.size(), 5u);
    EXPECT_GE(a[4].importance, 0.85);
    EXPECT_LE(a[0].importance, 0.15);
    EXPECT_GE(b[0].importance, 0.85);
    EXPECT_LE(b[4].importance, 0.15);
    for (std::size_t k = 0; k + 1 < a.size(); ++k) {
        EXPECT_LE(a[k].importance, a[k + 1].importance + 0.02);
    }
    ASSERT_EQ(r.pairwise.size(), 1u);
    EXPECT_EQ(r.pairwise[0].importance.size(), 5u);
    EXPECT_LT(r.pairwise[0].importance[0], 0.1);
}

TEST(MoFanova, DegenerateObjectivesGiveFlaggedZeroCurves)
{
    const auto space = parse_space(R"({"name": "t", "hyperparameters": [
        {"name": "x1", "type": "float", "lower": 0, "upper": 1, "default": 0.5},
        {"name": "x2", "type": "float", "lower": 0, "upper": 1, "default": 0.5}]})");
    std::vector<Configuration> rows;
    for (int i = 0; i < 20; ++i) {
        rows.push_back({{"x1", i / 20.0}, {"x2", (i * 7 % 20) / 20.0}});
    }
    const MetaDataset ds(space, rows, {ObjectiveColumn("a", std::vector<double>(20, 1.0)),
                                       ObjectiveColumn("b", std::vector<double>(20, 4.0))});
    FanovaOptions opts;
    opts.forest.n_trees = 5;
    opts.weights = grid_weights(3);
    const auto r = mo_fanova(ds, opts);
    for (const auto& c : r.curves) {
        for (const auto& p : c.points) {
            EXPECT_EQ(p.importance, 0.0);
            EXPECT_TRUE(p.degenerate);
        }
    }
}

TEST(MoFanova, ConditionalSpaceUsesTheSentinelDomain)
{
    const auto space = parse_space(R"({"name": "c", "hyperparameters": [
        {"name": "use", "type": "boolean", "default": true},
        {"name": "amount", "type": "float", "lower": 0, "upper": 1, "default": 0.5,
         "condition": {"parent": "use", "value": true}}]})");
    Rng rng(4);
    std::vector<Configuration> rows;
    std::vector<double> o1, o2;
    for (int i = 0; i < 200; ++i) {
        const bool use = rng.below(2) == 0;
        const double amount = rng.uniform();
        rows.push_back(use ? Configuration{{"use", true}, {"amount", amount}} : Configuration{{"use", false}});
        o1.push_back(use ? amount : 0.5);
        o2.push_back(use ? 1.0 - amount : 0.2);
    }
    const MetaDataset ds(space, rows, {ObjectiveColumn("a", o1), ObjectiveColumn("b", o2)});
    FanovaOptions opts;
    opts.forest.n_trees = 10;
    opts.weights = grid_weights(3);
    opts.on_forest = [](std::size_t, const WeightVector&, const Forest& f) {
        EXPECT_EQ(f.domain()[1].lo, kInactive);
        for (const auto& t : f.trees()) {
            EXPECT_NEAR(decompose_tree(t, f.domain()).unit_measure, 1.0, 1e-9);
        }
    };
    const auto r = mo_fanova(ds, opts);
    EXPECT_GT(r.curves[1].points[0].importance, 0.1);
}

TEST(MoFanova, RejectsWrongObjectiveCount)
{
    const auto problem = load_problem(kData + "/problems/separable.json");
    const auto ds = sample_runs(problem, 20, 2).select_objectives({"f1"});
    FanovaOptions opts;
    opts.weights = grid_weights(2);
    EXPECT_THROW(mo_fanova(ds, opts), InvalidArgumentError);
}
