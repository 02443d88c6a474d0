#include "cubecoda/cube.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace cubecoda;
using testsupport::TestRng;

namespace {

std::vector<CellRecord> czech_records() {
    // deliberately not in canonical order
    return {
        {{"M", "PT", "55+"}, 38.208, 13},   {{"F", "FT", "15-24"}, 104.756, 2},
        {{"F", "FT", "25-54"}, 1618.415, 3}, {{"M", "FT", "15-24"}, 169.851, 8},
        {{"F", "FT", "55+"}, 317.031, 4},    {{"F", "PT", "15-24"}, 17.128, 5},
        {{"F", "PT", "25-54"}, 90.505, 6},   {{"M", "FT", "25-54"}, 2127.849, 9},
        {{"F", "PT", "55+"}, 56.355, 7},     {{"M", "FT", "55+"}, 467.212, 10},
        {{"M", "PT", "15-24"}, 11.165, 11},  {{"M", "PT", "25-54"}, 22.759, 12},
    };
}

// direct-enumeration geometric mean of all cells matching the fixed indices
// (-1 = free); the marginal oracle
double gm_enum(const KCube& cube, int i, int j, int k) {
    std::vector<double> cells;
    for (std::size_t flat = 0; flat < cube.cell_count(); ++flat) {
        const auto m = cube.cell_multi(flat);
        if (i >= 0 && m[0] != static_cast<std::size_t>(i)) continue;
        if (j >= 0 && m[1] != static_cast<std::size_t>(j)) continue;
        if (k >= 0 && m[2] != static_cast<std::size_t>(k)) continue;
        cells.push_back(cube.data()[flat]);
    }
    return geometric_mean(cells);
}

// the three-factor closed forms, evaluated cell by cell
std::vector<double> paper_part(const KCube& x, const std::string& label) {
    std::vector<double> out(x.cell_count());
    for (std::size_t flat = 0; flat < x.cell_count(); ++flat) {
        const auto m = x.cell_multi(flat);
        const int i = static_cast<int>(m[0]);
        const int j = static_cast<int>(m[1]);
        const int k = static_cast<int>(m[2]);
        const double gi = gm_enum(x, i, -1, -1);
        const double gj = gm_enum(x, -1, j, -1);
        const double gk = gm_enum(x, -1, -1, k);
        if (label == "ind")
            out[flat] = gi * gj * gk;
        else if (label == "rc")
            out[flat] = gm_enum(x, i, j, -1) / (gi * gj);
        else if (label == "rs")
            out[flat] = gm_enum(x, i, -1, k) / (gi * gk);
        else if (label == "cs")
            out[flat] = gm_enum(x, -1, j, k) / (gj * gk);
        else if (label == "rcs")
            out[flat] = x.data()[flat] * gi * gj * gk /
                        (gm_enum(x, i, j, -1) * gm_enum(x, -1, j, k) *
                         gm_enum(x, i, -1, k));
        else
            throw std::logic_error("bad label");
    }
    return out;
}

std::vector<double> closed_vec(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / s;
    return out;
}

// cube whose cells are the product of three positive per-factor vectors
KCube product_cube(TestRng& rng, const std::vector<std::size_t>& dims) {
    auto factors = testsupport::random_factors(rng, dims);
    std::vector<std::vector<double>> per_factor;
    for (std::size_t d : dims)
        per_factor.push_back(testsupport::random_positive_vector(rng, d));
    std::size_t cells = 1;
    for (std::size_t d : dims) cells *= d;
    KCube probe(factors, std::vector<double>(cells, 1.0));
    std::vector<double> data(cells);
    for (std::size_t flat = 0; flat < cells; ++flat) {
        const auto m = probe.cell_multi(flat);
        double v = 1.0;
        for (std::size_t f = 0; f < dims.size(); ++f) v *= per_factor[f][m[f]];
        data[flat] = v;
    }
    return KCube(std::move(factors), std::move(data));
}

} // namespace

TEST(FromLongRecords, CzechCubeInCanonicalOrder) {
    const KCube cube = KCube::from_long_records(testsupport::czech_factors(),
                                                czech_records(), "CZ");
    const auto& expect = testsupport::czech_cells();
    ASSERT_EQ(cube.cell_count(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
        EXPECT_DOUBLE_EQ(cube.data()[i], expect[i]);
    EXPECT_EQ(cube.id(), "CZ");
    EXPECT_EQ(cube.dim(0), 2u);
    EXPECT_EQ(cube.dim(2), 3u);
}

TEST(FromLongRecords, MissingCell) {
    auto records = czech_records();
    records.pop_back();  // drop (M, PT, 25-54)
    try {
        KCube::from_long_records(testsupport::czech_factors(), records);
        FAIL() << "expected missing-cell error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("missing cell"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("gender=M"), std::string::npos);
    }
}

TEST(FromLongRecords, DuplicateCell) {
    auto records = czech_records();
    records.push_back({{"F", "FT", "15-24"}, 1.0, 99});
    try {
        KCube::from_long_records(testsupport::czech_factors(), records);
        FAIL() << "expected duplicate-cell error";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("duplicate cell"), std::string::npos);
        EXPECT_NE(msg.find("line 99"), std::string::npos);
    }
}

TEST(FromLongRecords, UnknownLevelAndNonPositiveValue) {
    auto bad_level = czech_records();
    bad_level[0].levels[2] = "65+";
    EXPECT_THROW(KCube::from_long_records(testsupport::czech_factors(), bad_level),
                 std::invalid_argument);

    auto bad_value = czech_records();
    bad_value[3].value = -5.0;
    try {
        KCube::from_long_records(testsupport::czech_factors(), bad_value);
        FAIL() << "expected non-positive error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("non-positive"), std::string::npos);
    }
}

TEST(KCube, Validation) {
    auto factors = testsupport::czech_factors();
    EXPECT_THROW(KCube(factors, std::vector<double>(11, 1.0)), std::invalid_argument);
    std::vector<double> with_zero(12, 1.0);
    with_zero[5] = 0.0;
    EXPECT_THROW(KCube(factors, with_zero), std::invalid_argument);
    EXPECT_THROW(KCube({factors[0]}, {1, 2}), std::invalid_argument);
}

TEST(GeoMarginal, UniformCube) {
    const KCube cube(testsupport::czech_factors(), std::vector<double>(12, 3.0));
    for (const auto& keep : std::vector<std::vector<std::size_t>>{{0}, {1}, {0, 2}}) {
        const auto m = geo_marginal(cube, std::span<const std::size_t>(keep));
        for (double v : m.values) EXPECT_NEAR(v, 3.0, 1e-12);
    }
}

TEST(GeoMarginal, ContractMarginalOfCzechCube) {
    const KCube cube = testsupport::czech_cube();
    const auto m = geo_marginal(cube, std::vector<std::string>{"contract"});
    ASSERT_EQ(m.values.size(), 2u);
    EXPECT_NEAR(m.values[0], gm_enum(cube, -1, 0, -1), 1e-9);
    EXPECT_NEAR(m.values[1], gm_enum(cube, -1, 1, -1), 1e-9);
    EXPECT_NEAR(m.values[0], 457.0, 0.5);
    EXPECT_NEAR(m.values[1], 30.77, 0.01);
}

TEST(GeoMarginal, KeepAllAndKeepNone) {
    const KCube cube = testsupport::czech_cube();
    const std::vector<std::size_t> all{0, 1, 2};
    const auto full = geo_marginal(cube, std::span<const std::size_t>(all));
    ASSERT_EQ(full.values.size(), cube.cell_count());
    for (std::size_t i = 0; i < full.values.size(); ++i)
        EXPECT_NEAR(full.values[i], cube.data()[i], 1e-12);

    const auto overall =
        geo_marginal(cube, std::span<const std::size_t>(std::vector<std::size_t>{}));
    ASSERT_EQ(overall.values.size(), 1u);
    EXPECT_NEAR(overall.values[0], gm_enum(cube, -1, -1, -1), 1e-9);
}

TEST(GeoMarginal, UnknownFactor) {
    const KCube cube = testsupport::czech_cube();
    EXPECT_THROW(geo_marginal(cube, std::vector<std::string>{"nope"}),
                 std::invalid_argument);
    const std::vector<std::size_t> bad{7};
    EXPECT_THROW(geo_marginal(cube, std::span<const std::size_t>(bad)),
                 std::invalid_argument);
}

TEST(IndependencePart, UniformAndProductFixedPoints) {
    const KCube uniform(testsupport::czech_factors(), std::vector<double>(12, 2.0));
    const KCube ind_u = independence_part(uniform);
    for (double v : ind_u.data()) EXPECT_NEAR(v, 2.0, 1e-12);

    TestRng rng(3);
    const KCube prod = product_cube(rng, {2, 3, 2});
    const KCube ind_p = independence_part(prod);
    EXPECT_TRUE(equivalent(prod.as_composition(), ind_p.as_composition(), 1e-10));
}

TEST(FullInteractive, ProductCubeIsNeutral) {
    TestRng rng(5);
    const KCube prod = product_cube(rng, {2, 2, 3});
    const KCube inter = full_interactive(prod);
    const auto closed = closed_vec(inter.data());
    for (double v : closed) EXPECT_NEAR(v, 1.0 / 12.0, 1e-12);
}

TEST(FullInteractive, PerturbationReconstructsCube) {
    TestRng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const KCube cube = testsupport::random_cube(rng, {2, 2, 3});
        const KCube ind = independence_part(cube);
        const KCube inter = full_interactive(cube);
        const auto lhs = closed_vec(cube.data());
        std::vector<double> recon(cube.cell_count());
        for (std::size_t i = 0; i < recon.size(); ++i)
            recon[i] = ind.data()[i] * inter.data()[i];
        const auto rhs = closed_vec(recon);
        for (std::size_t i = 0; i < recon.size(); ++i)
            EXPECT_NEAR(rhs[i], lhs[i], 1e-12 * lhs[i] + 1e-15);
    }
}

TEST(InteractionPart, NeutralWhenNoInteraction) {
    TestRng rng(9);
    // product cube: every pairwise interaction is neutral
    const KCube prod = product_cube(rng, {2, 2, 3});
    const std::vector<std::size_t> rc{0, 1};
    const auto part = interaction_part(prod, rc);
    const auto closed = closed_vec(part.data());
    for (double v : closed) EXPECT_NEAR(v, 1.0 / 12.0, 1e-12);
}

TEST(InteractionPart, MatchesPaperClosedFormsExactly) {
    TestRng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const KCube cube = testsupport::random_cube(rng, {2, 2, 3});
        for (const std::string label : {"rc", "rs", "cs", "rcs"}) {
            const auto d = decompose(cube);
            const auto oracle = paper_part(cube, label);
            const auto& got = d.part(label).data();
            for (std::size_t i = 0; i < oracle.size(); ++i)
                EXPECT_NEAR(std::log(got[i]), std::log(oracle[i]), 1e-12);
        }
    }
}

// the alternating sum including the empty subset (overall geometric mean)
// differs from the implemented parts only by a constant killed by closure;
// the oracle side is built purely from enumerated marginals
TEST(InteractionPart, MobiusWithOverallMeanAgreesAfterClosure) {
    TestRng rng(13);
    const std::vector<std::string> labels{"rc", "rs", "cs", "rcs"};
    const std::vector<std::vector<std::size_t>> subsets{
        {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
    for (int rep = 0; rep < 10; ++rep) {
        const KCube cube = testsupport::random_cube(rng, {2, 2, 3});
        const double g0 = gm_enum(cube, -1, -1, -1);
        for (std::size_t s = 0; s < subsets.size(); ++s) {
            const double empty_term =
                (subsets[s].size() % 2 == 0) ? g0 : 1.0 / g0;
            auto mobius = paper_part(cube, labels[s]);
            for (double& v : mobius) v *= empty_term;

            const auto part = interaction_part(cube, subsets[s]);
            const auto a = closed_vec(mobius);
            const auto b = closed_vec(part.data());
            for (std::size_t i = 0; i < a.size(); ++i)
                EXPECT_NEAR(a[i], b[i], 1e-12);
        }
    }
}

TEST(InteractionPart, PairwisePartsHaveUniformMarginalsInsideTheSubset) {
    TestRng rng(15);
    const KCube cube = testsupport::random_cube(rng, {3, 2, 3});
    const std::vector<std::size_t> rc{0, 1};
    const auto part = interaction_part(cube, rc);

    // aggregation across the row direction and across the column direction
    // gives constant tables; slices are identical copies
    for (std::size_t drop : {0u, 1u}) {
        std::vector<std::size_t> keep;
        for (std::size_t f = 0; f < 3; ++f)
            if (f != drop) keep.push_back(f);
        const auto m = geo_marginal(part, std::span<const std::size_t>(keep));
        for (double v : m.values) EXPECT_NEAR(v, m.values[0], 1e-12 * v);
    }
    for (std::size_t flat = 0; flat < part.cell_count(); ++flat) {
        auto m = part.cell_multi(flat);
        m[2] = 0;
        EXPECT_NEAR(part.data()[flat], part.data()[part.cell_index(m)], 1e-15);
    }
}

TEST(InteractionPart, Errors) {
    const KCube cube = testsupport::czech_cube();
    const std::vector<std::size_t> single{0};
    EXPECT_THROW(interaction_part(cube, single), std::invalid_argument);
    const std::vector<std::size_t> bad{0, 9};
    EXPECT_THROW(interaction_part(cube, bad), std::invalid_argument);
}

TEST(Decompose, ProductCube) {
    TestRng rng(17);
    const KCube prod = product_cube(rng, {2, 2, 3});
    const auto d = decompose(prod);
    ASSERT_EQ(d.labels, (std::vector<std::string>{"ind", "rc", "rs", "cs", "rcs"}));
    EXPECT_TRUE(equivalent(prod.as_composition(), d.part("ind").as_composition(),
                           1e-10));
    for (const std::string label : {"rc", "rs", "cs", "rcs"}) {
        const auto closed = closed_vec(d.part(label).data());
        for (double v : closed) EXPECT_NEAR(v, 1.0 / 12.0, 1e-12);
    }
}

TEST(Decompose, ExactLogReconstruction) {
    TestRng rng(19);
    for (int rep = 0; rep < 20; ++rep) {
        const KCube cube = testsupport::random_cube(rng, rep % 2 ? std::vector<std::size_t>{2, 2, 3}
                                                                 : std::vector<std::size_t>{3, 3, 3});
        const auto d = decompose(cube);
        for (std::size_t i = 0; i < cube.cell_count(); ++i) {
            double log_sum = 0.0;
            for (const KCube& part : d.parts) log_sum += std::log(part.data()[i]);
            EXPECT_NEAR(log_sum, std::log(cube.data()[i]), 1e-12);
        }
    }
}

TEST(Decompose, PartsPairwiseOrthogonal) {
    TestRng rng(21);
    for (int rep = 0; rep < 10; ++rep) {
        const KCube cube = testsupport::random_cube(rng, {2, 2, 3});
        const auto d = decompose(cube);
        for (std::size_t a = 0; a < d.size(); ++a)
            for (std::size_t b = a + 1; b < d.size(); ++b)
                EXPECT_NEAR(aitchison_inner(d.parts[a].as_composition(),
                                            d.parts[b].as_composition()),
                            0.0, 1e-8);
    }
}

TEST(Decompose, TwoFactorTableMatchesDirectFormulas) {
    TestRng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        const KCube table = testsupport::random_cube(rng, {3, 2});
        const auto d = decompose(table);
        ASSERT_EQ(d.labels, (std::vector<std::string>{"ind", "rc"}));

        // independence table: product of row and column geometric means;
        // interaction table: cell over that product
        for (std::size_t flat = 0; flat < table.cell_count(); ++flat) {
            const auto m = table.cell_multi(flat);
            std::vector<double> row_cells, col_cells;
            for (std::size_t other = 0; other < table.cell_count(); ++other) {
                const auto mo = table.cell_multi(other);
                if (mo[0] == m[0]) row_cells.push_back(table.data()[other]);
                if (mo[1] == m[1]) col_cells.push_back(table.data()[other]);
            }
            const double ind = geometric_mean(row_cells) * geometric_mean(col_cells);
            EXPECT_NEAR(std::log(d.part("ind").data()[flat]), std::log(ind), 1e-10);
            EXPECT_NEAR(std::log(d.part("rc").data()[flat]),
                        std::log(table.data()[flat] / ind), 1e-10);
        }
    }
}

TEST(Decompose, ScaleInvariance) {
    TestRng rng(25);
    const KCube cube = testsupport::random_cube(rng, {2, 2, 3});
    std::vector<double> scaled = cube.data();
    for (double& v : scaled) v *= 1234.5;
    const auto d1 = decompose(cube);
    const auto d2 = decompose(cube.with_data(scaled));
    for (std::size_t p = 0; p < d1.size(); ++p)
        EXPECT_TRUE(equivalent(d1.parts[p].as_composition(),
                               d2.parts[p].as_composition(), 1e-10));
}

TEST(FactorSubsets, OrderAndContent) {
    const auto subs = factor_subsets(3, 2);
    ASSERT_EQ(subs.size(), 4u);
    EXPECT_EQ(subs[0], (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(subs[1], (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(subs[2], (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(subs[3], (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(factor_subsets(4, 1).size(), 15u);
}

TEST(FactorCodes, Labels) {
    EXPECT_EQ(factor_codes(3), (std::vector<std::string>{"r", "c", "s"}));
    EXPECT_EQ(factor_codes(2), (std::vector<std::string>{"r", "c"}));
    const auto c4 = factor_codes(4);
    EXPECT_EQ(c4[3], "f4");
    const std::vector<std::size_t> sub{0, 2};
    EXPECT_EQ(subset_label(sub, factor_codes(3)), "rs");
}
