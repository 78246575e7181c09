#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "scenes.hpp"

namespace vesselseg {
namespace {

PhantomSpec centred_cylinder(double noise)
{
    PhantomSpec s;
    s.dims = {40, 40, 40};
    s.spacing = {0.5, 0.5, 0.5};
    s.noise_sigma = noise;
    s.rng_seed = 3;
    s.tubes.push_back(scenes::line({9.75, 9.75, 2.0}, {9.75, 9.75, 17.0}, 1.0));
    return s;
}

TEST(Phantom, CylinderVoxelCountMatchesAnalyticVolume)
{
    const auto ph = generate_phantom(centred_cylinder(0.0));
    // Capped segment: cylinder plus two half-balls.
    const double r = 1.0;
    const double analytic = std::numbers::pi * r * r * 15.0 + 4.0 / 3.0 * std::numbers::pi * r * r * r;
    const double measured = static_cast<double>(count_set(ph.truth)) * voxel_volume(ph.truth);
    EXPECT_NEAR(measured, analytic, 0.15 * analytic);
}

TEST(Phantom, ProfileIsGaussianWithHalfRadiusScale)
{
    const auto ph = generate_phantom(centred_cylinder(0.0));
    // Voxel (19, 19, 20) is at distance 0.25*sqrt(2) mm from the axis.
    const double d = std::hypot(19 * 0.5 - 9.75, 19 * 0.5 - 9.75);
    EXPECT_NEAR(ph.volume(19, 19, 20), std::exp(-d * d / (2 * 0.5 * 0.5)), 1e-12);
}

TEST(Phantom, SameSeedIsBitIdentical)
{
    const auto a = generate_phantom(centred_cylinder(0.1));
    const auto b = generate_phantom(centred_cylinder(0.1));
    EXPECT_EQ(a.volume, b.volume);
    EXPECT_EQ(a.truth, b.truth);
}

TEST(Phantom, ThreadCountDoesNotChangeNoise)
{
    EXPECT_EQ(generate_phantom(centred_cylinder(0.1), 1).volume, generate_phantom(centred_cylinder(0.1), 8).volume);
}

TEST(Phantom, TruthIndependentOfNoiseAndSeed)
{
    auto spec = centred_cylinder(0.0);
    const auto clean = generate_phantom(spec);
    spec.noise_sigma = 0.3;
    spec.rng_seed = 99;
    const auto noisy = generate_phantom(spec);
    EXPECT_EQ(clean.truth, noisy.truth);
    EXPECT_NE(clean.volume, noisy.volume);
}

TEST(Phantom, NoiseHasRequestedSpread)
{
    PhantomSpec s;
    s.dims = {40, 40, 40};
    s.noise_sigma = 0.2;
    s.background = 1.0;
    s.rng_seed = 11;
    const auto ph = generate_phantom(s);
    double sum = 0.0;
    double sq = 0.0;
    for (const double x : ph.volume) {
        sum += x - 1.0;
        sq += (x - 1.0) * (x - 1.0);
    }
    const double n = static_cast<double>(ph.volume.size());
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(std::sqrt(sq / n), 0.2, 0.005);
    EXPECT_EQ(count_set(ph.truth), 0U);
}

TEST(Phantom, RejectsInvalidSpecs)
{
    auto s = centred_cylinder(0.0);
    s.tubes[0].radius_mm = 0.0;
    EXPECT_THROW((void)generate_phantom(s), ParameterError);
    s = centred_cylinder(0.0);
    s.tubes[0].contrast = -1.0;
    EXPECT_THROW((void)generate_phantom(s), ParameterError);
    s = centred_cylinder(0.0);
    s.noise_sigma = -0.1;
    EXPECT_THROW((void)generate_phantom(s), ParameterError);
    s = centred_cylinder(0.0);
    s.tubes[0] = scenes::line({9.75, 9.75, 2.0}, {9.75, 9.75, 25.0}, 1.0);  // past z = 19.5
    EXPECT_THROW((void)generate_phantom(s), ParameterError);
}

TEST(Phantom, ArcTruthFollowsTheCircle)
{
    PhantomSpec s;
    s.dims = {40, 40, 10};
    s.spacing = {0.5, 0.5, 0.5};
    s.tubes.push_back({CircularArc{{10, 10, 2}, {1, 0, 0}, {0, 1, 0}, 6.0, 0.0, 180.0}, 0.6, 1.0});
    const auto ph = generate_phantom(s);
    EXPECT_EQ(ph.truth(32, 20, 4), 1);  // angle 0: (16, 10, 2)
    EXPECT_EQ(ph.truth(20, 32, 4), 1);  // angle 90: (10, 16, 2)
    EXPECT_EQ(ph.truth(8, 20, 4), 1);   // angle 180: (4, 10, 2)
    EXPECT_EQ(ph.truth(20, 8, 4), 0);   // angle 270 lies outside the arc
}

TEST(PhantomSpecFile, ParsesLinesAndArcs)
{
    std::istringstream in(
        "dims = 32 32 16\n"
        "spacing = 0.5 0.5 1.0\n"
        "background = 0.1\n"
        "noise_sigma = 0.05\n"
        "seed = 42\n"
        "tube = line 2 2 1 2 2 14 1.0 1.0\n"
        "tube = arc 8 8 7 1 0 0 0 1 0 5 0 90 0.8 0.5\n");
    const auto s = parse_phantom_spec(in);
    EXPECT_EQ(s.dims, (Dims{32, 32, 16}));
    EXPECT_EQ(s.spacing, (Spacing{0.5, 0.5, 1.0}));
    EXPECT_EQ(s.rng_seed, 42U);
    ASSERT_EQ(s.tubes.size(), 2U);
    EXPECT_TRUE(std::holds_alternative<LineSegment>(s.tubes[0].path));
    const auto& arc = std::get<CircularArc>(s.tubes[1].path);
    EXPECT_EQ(arc.arc_radius_mm, 5.0);
    EXPECT_EQ(arc.end_deg, 90.0);
    EXPECT_EQ(s.tubes[1].contrast, 0.5);
}

TEST(PhantomSpecFile, RejectsMalformedInput)
{
    for (const char* text : {"dims = 4 4\n", "tube = spiral 1 2 3\n", "tube = line 1 1 1 2 2 2 1\n", "seed = -1\n",
                             "colour = red\n"}) {
        std::istringstream in(text);
        EXPECT_THROW((void)parse_phantom_spec(in), ParameterError) << text;
    }
}

TEST(PhantomSpecFile, SampleSpecLoads)
{
    const auto s = load_phantom_spec(std::filesystem::path(VESSELSEG_CONFIG_DIR) / "reference_phantom.txt");
    EXPECT_EQ(s.dims, (Dims{128, 128, 128}));
    EXPECT_EQ(s.tubes.size(), scenes::reference_spec().tubes.size());
}

TEST(Dice, DirectFormulaCases)
{
    BinaryMask p(Geometry{{4, 1, 1}, {}, {}});
    BinaryMask g = p;
    EXPECT_EQ(dice(p, g), 1.0);  // both empty
    p[0] = p[1] = 1;
    g[1] = g[2] = 1;
    EXPECT_EQ(dice(p, g), 0.5);
    EXPECT_EQ(dice(p, p), 1.0);
    BinaryMask q = BinaryMask::like(p);
    q[3] = 1;
    EXPECT_EQ(dice(p, q), 0.0);
    const BinaryMask other(Geometry{{2, 2, 1}, {}, {}});
    EXPECT_THROW((void)dice(p, other), GeometryError);
}

TEST(Dice, SymmetricAndMatchesSetArithmetic)
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = oracle::random_mask(rng, {6, 5, 4}, 0.3);
        const auto b = oracle::random_mask(rng, {6, 5, 4}, 0.4);
        std::size_t na = 0, nb = 0, both = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            na += a[i];
            nb += b[i];
            both += a[i] & b[i];
        }
        const double expected = na + nb == 0 ? 1.0 : 2.0 * both / static_cast<double>(na + nb);
        EXPECT_DOUBLE_EQ(dice(a, b), expected);
        EXPECT_EQ(dice(a, b), dice(b, a));
    }
}

TEST(Evaluate, PerfectAndEmptyPredictions)
{
    const auto ph = generate_phantom(centred_cylinder(0.0));
    const auto perfect = evaluate(ph.truth, ph.truth, ph.tubes);
    EXPECT_EQ(perfect.dice, 1.0);
    EXPECT_EQ(perfect.sensitivity, 1.0);
    EXPECT_EQ(perfect.false_positive_voxel_fraction, 0.0);
    EXPECT_EQ(perfect.component_count_pred, perfect.component_count_gt);
    ASSERT_EQ(perfect.tubes.size(), 1U);
    EXPECT_EQ(perfect.tubes[0].dice, 1.0);
    EXPECT_EQ(perfect.tubes[0].radius_mm, 1.0);

    const auto empty = evaluate(BinaryMask::like(ph.truth), ph.truth, ph.tubes);
    EXPECT_EQ(empty.dice, 0.0);
    EXPECT_EQ(empty.sensitivity, 0.0);
}

TEST(Evaluate, FieldsMatchBruteForceCounting)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = oracle::random_mask(rng, {8, 8, 8}, 0.2);
        const auto g = oracle::random_mask(rng, {8, 8, 8}, 0.15);
        std::size_t np = 0, ng = 0, tp = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            np += p[i];
            ng += g[i];
            tp += p[i] & g[i];
        }
        const auto r = evaluate(p, g);
        EXPECT_EQ(r.predicted_voxels, np);
        EXPECT_EQ(r.truth_voxels, ng);
        EXPECT_DOUBLE_EQ(r.sensitivity, static_cast<double>(tp) / ng);
        EXPECT_DOUBLE_EQ(r.false_positive_voxel_fraction, static_cast<double>(np - tp) / np);
        const auto bp = oracle::bfs_labels(p, Connectivity::Corner);
        const auto bg = oracle::bfs_labels(g, Connectivity::Corner);
        EXPECT_EQ(r.component_count_pred, static_cast<std::size_t>(*std::max_element(bp.begin(), bp.end())));
        EXPECT_EQ(r.component_count_gt, static_cast<std::size_t>(*std::max_element(bg.begin(), bg.end())));
        for (const double rate : {r.dice, r.sensitivity, r.false_positive_voxel_fraction}) {
            EXPECT_GE(rate, 0.0);
            EXPECT_LE(rate, 1.0);
        }
    }
}

TEST(Evaluate, ReportIsFlatKeyValueText)
{
    const auto ph = generate_phantom(centred_cylinder(0.0));
    const auto text = to_string(evaluate(ph.truth, ph.truth, ph.tubes));
    EXPECT_NE(text.find("dice = 1\n"), std::string::npos);
    EXPECT_NE(text.find("tube.0.radius_mm = 1\n"), std::string::npos);
    EXPECT_NE(text.find("noise_generator = splitmix64-indexed/box-muller\n"), std::string::npos);
}

}  // namespace
}  // namespace vesselseg
