#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "rfan/patients.hpp"

using namespace rfan;

TEST_CASE("synthetic closed forms") {
    CHECK(synthetic_mean(0.0, 1) == doctest::Approx(3.0));
    CHECK(synthetic_mean(0.0, 0) == doctest::Approx(1.0));
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const double x = 3.0 * rng.normal();
        CHECK(synthetic_mean(x, 0) == doctest::Approx(oracle::true_mean0(x)));
        CHECK(synthetic_mean(x, 1) == doctest::Approx(oracle::true_mean1(x)));
    }
}

TEST_CASE("synthetic cohort: structure and reproducibility") {
    const Cohort a = synthetic_cohort(50, 20, 7);
    const Cohort b = synthetic_cohort(50, 20, 7);
    REQUIRE(a.pool().size() == 50);
    REQUIRE(a.test().size() == 20);
    for (std::size_t i = 0; i < a.pool().size(); ++i) {
        CHECK(a.pool()[i].x(0) == b.pool()[i].x(0));
        CHECK(a.pool()[i].y0 == b.pool()[i].y0);
        CHECK(a.pool()[i].y1 == b.pool()[i].y1);
    }
    // pool and test ids disjoint
    for (const auto& p : a.pool()) {
        for (const auto& t : a.test()) CHECK(p.id != t.id);
    }
    // records carry both noiseless means
    CHECK(a.pool().front().mean0.has_value());
    CHECK(a.pool().front().mean1.has_value());
}

TEST_CASE("synthetic cohort: population statistics") {
    const Cohort c = synthetic_cohort(100000, 1, 13);
    double sx = 0.0, sxx = 0.0, ate = 0.0, n_s1 = 0.0, n_s2 = 0.0;
    double noise_mean = 0.0, noise_var = 0.0;
    for (const auto& p : c.pool()) {
        const double x = p.x(0);
        sx += x;
        sxx += x * x;
        ate += *p.mean1 - *p.mean0;
        n_s1 += p.subgroup == "s1";
        n_s2 += p.subgroup == "s2";
        const double e0 = p.y0 - *p.mean0;
        const double e1 = p.y1 - *p.mean1;
        noise_mean += e0 + e1;
        noise_var += e0 * e0 + e1 * e1;
    }
    const double n = static_cast<double>(c.pool().size());
    CHECK(std::fabs(sx / n) < 3.0 / std::sqrt(n));               // E x = 0
    CHECK(std::fabs(sxx / n - 1.0) < 3.0 * std::sqrt(2.0 / n));  // E x^2 = 1
    CHECK(ate / n == doctest::Approx(2.0).epsilon(0.01));
    // subgroup shares: Phi(-1.2) and 1 - Phi(1.3)
    CHECK(std::fabs(n_s1 / n - 0.11507) < 0.004);
    CHECK(std::fabs(n_s2 / n - 0.09680) < 0.004);
    CHECK(std::fabs(noise_mean / (2.0 * n)) < 0.01);
    CHECK(std::fabs(noise_var / (2.0 * n) - 1.0) < 0.02);
}

TEST_CASE("reveal semantics") {
    Cohort c = synthetic_cohort(10, 2, 3);
    const PatientRecord p = c.pool()[4];
    const double got = c.reveal(p.id, 1);
    CHECK(got == p.y1); // bit-exact stored outcome
    CHECK_THROWS_AS(c.reveal(p.id, 0), TrialError);
    CHECK_THROWS_AS(c.reveal(123456, 0), TrialError);
    CHECK(c.available_count() == 9);
    // paired noise: mean of y1 - y0 - tau over many patients is near 0
    Cohort big = synthetic_cohort(1000, 1, 5);
    double acc = 0.0;
    for (const auto& q : big.pool()) {
        acc += q.y1 - q.y0 - (*q.mean1 - *q.mean0);
    }
    CHECK(std::fabs(acc / 1000.0) < 0.15);
}

namespace {

std::filesystem::path write_tmp_csv(const std::string& name,
                                    const std::string& contents) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << contents;
    return path;
}

} // namespace

TEST_CASE("csv loader: well-formed file") {
    std::string body = "id,subgroup,x_0,x_1,y0,y1\n";
    for (int i = 0; i < 10; ++i) {
        body += std::to_string(i) + "," + (i % 3 == 0 ? "g1" : "") + "," +
                std::to_string(0.1 * i) + "," + std::to_string(-0.2 * i) + ",0.0,1.0\n";
    }
    const auto path = write_tmp_csv("rfan_ok.csv", body);
    const Cohort a = load_outcomes_csv(path.string(), 0.8, 11);
    CHECK(a.pool().size() == 8);
    CHECK(a.test().size() == 2);
    CHECK(a.pool().front().x.size() == 2);
    CHECK_FALSE(a.pool().front().mean0.has_value());
    // reproducible split
    const Cohort b = load_outcomes_csv(path.string(), 0.8, 11);
    for (std::size_t i = 0; i < a.pool().size(); ++i) {
        CHECK(a.pool()[i].id == b.pool()[i].id);
    }
    const Cohort c = load_outcomes_csv(path.string(), 0.8, 12);
    bool same = true;
    for (std::size_t i = 0; i < a.pool().size(); ++i) {
        same = same && a.pool()[i].id == c.pool()[i].id;
    }
    CHECK_FALSE(same);
}

TEST_CASE("csv loader: malformed inputs name the offending cell") {
    const auto missing =
        write_tmp_csv("rfan_missing.csv", "id,subgroup,x_0,y0,y1\n0,,0.5,1.0\n");
    CHECK_THROWS_WITH_AS(load_outcomes_csv(missing.string(), 0.8, 1),
                         doctest::Contains("line 2"), ParseError);

    const auto text =
        write_tmp_csv("rfan_text.csv", "id,subgroup,x_0,y0,y1\n0,,abc,1.0,0.0\n");
    CHECK_THROWS_WITH_AS(load_outcomes_csv(text.string(), 0.8, 1),
                         doctest::Contains("x_0"), ParseError);

    const auto nan =
        write_tmp_csv("rfan_nan.csv", "id,subgroup,x_0,y0,y1\n0,,nan,1.0,0.0\n");
    CHECK_THROWS_AS(load_outcomes_csv(nan.string(), 0.8, 1), ParseError);

    const auto header =
        write_tmp_csv("rfan_header.csv", "id,subgroup,x_1,y0,y1\n0,,0.1,1.0,0.0\n");
    CHECK_THROWS_AS(load_outcomes_csv(header.string(), 0.8, 1), ParseError);

    const auto dup =
        write_tmp_csv("rfan_dup.csv",
                      "id,subgroup,x_0,y0,y1\n0,,0.1,1.0,0.0\n0,,0.2,1.0,0.0\n");
    CHECK_THROWS_WITH_AS(load_outcomes_csv(dup.string(), 0.5, 1),
                         doctest::Contains("duplicate id"), ParseError);
}

TEST_CASE("csv loader: binary complementary-outcome fixture") {
    // outcomes defined as y^w = 1{w == optimal arm}, so y0 + y1 = 1 per row
    std::string body = "id,subgroup,x_0,y0,y1\n";
    Rng rng(77);
    for (int i = 0; i < 40; ++i) {
        const int optimal = rng.coin();
        body += std::to_string(i) + ",grp" + std::to_string(i % 2) + "," +
                std::to_string(rng.normal()) + "," + std::to_string(optimal == 0) +
                "," + std::to_string(optimal == 1) + "\n";
    }
    const auto path = write_tmp_csv("rfan_binary.csv", body);
    const Cohort c = load_outcomes_csv(path.string(), 0.8, 3);
    for (const auto& p : c.pool()) CHECK(p.y0 + p.y1 == doctest::Approx(1.0));
    for (const auto& p : c.test()) CHECK(p.y0 + p.y1 == doctest::Approx(1.0));
}
