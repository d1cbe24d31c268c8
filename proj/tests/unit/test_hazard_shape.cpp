#include "catch_amalgamated.hpp"

#include "ewd/hazard_shape.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ewd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("s(z) values", "[shape]")
{
    CHECK(s_of_z(2.0, 1.0, 1.0) == 0.0);
    CHECK_THAT(s_of_z(1.5, 2.0, 2.0), WithinRel(2.2163953243244931459, 1e-12));
    CHECK_THAT(s_of_z(1.5, 0.5, 0.5), WithinRel(-0.16267483278475092818, 1e-12));
    CHECK(s_of_z(1.5, 2.0, 2.0) > 0.0);
    CHECK(s_of_z(1.5, 0.5, 0.5) < 0.0);
    CHECK_THROWS_AS(s_of_z(1.0, 2.0, 2.0), domain_error);
    CHECK_THROWS_AS(s_of_z(0.5, 2.0, 2.0), domain_error);
    CHECK_THROWS_AS(s_of_z(2.0, -1.0, 2.0), invalid_parameter);
}

TEST_CASE("s(z) vanishes for the exponential", "[shape]")
{
    for (double z : {1.0001, 1.5, 2.0, 10.0, 1e4}) {
        CHECK(s_of_z(z, 1.0, 1.0) == 0.0);
    }
}

TEST_CASE("scaled form matches the printed expression", "[shape]")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lg(-1.5, 1.5);
    std::uniform_real_distribution<double> zz(1.05, 30.0);
    for (int i = 0; i < 500; ++i) {
        const double a = std::pow(10.0, lg(rng));
        const double b = std::pow(10.0, lg(rng));
        const double z = zz(rng);
        const double direct = b * z * std::log(z) * (std::pow(z - 1, a) + (a - z) * std::pow(z, a - 1)) +
                              (b - 1) * (z - 1) * (std::pow(z, a) - std::pow(z - 1, a));
        const double scale = std::abs(b * z * std::log(z) * std::pow(z, a)) + std::abs((b - 1) * (z - 1) * std::pow(z, a));
        CHECK_THAT(s_of_z(z, a, b), WithinAbs(direct, 1e-11 * scale));
    }
}

TEST_CASE("classify_region", "[shape]")
{
    auto r = classify_region(2, 2);
    CHECK(r.label == Region::I);
    CHECK(r.shape == HazardShape::monotone_increasing);

    r = classify_region(0.5, 0.5);
    CHECK(r.label == Region::II);
    CHECK(r.shape == HazardShape::monotone_decreasing);

    r = classify_region(3, 0.5);
    CHECK(r.label == Region::III);
    CHECK(r.shape == HazardShape::unimodal);

    r = classify_region(0.2, 2);
    CHECK(r.label == Region::IV);
    CHECK(r.shape == HazardShape::bathtub);
    CHECK(r.nominal);

    r = classify_region(1, 1);
    CHECK(r.shape == HazardShape::boundary);
    CHECK(r.constant_hazard);

    r = classify_region(2, 1); // beta = 1, alpha > 1
    CHECK(r.shape == HazardShape::boundary);
    CHECK(r.label == Region::I);
    CHECK(r.boundary_direction == HazardShape::monotone_increasing);

    r = classify_region(0.5, 1); // beta = 1, alpha < 1
    CHECK(r.label == Region::II);
    CHECK(r.boundary_direction == HazardShape::monotone_decreasing);

    r = classify_region(0.5, 2); // alpha beta = 1, beta > 1
    CHECK(r.shape == HazardShape::boundary);
    CHECK(r.label == Region::I);

    r = classify_region(2, 0.5); // alpha beta = 1, beta < 1
    CHECK(r.shape == HazardShape::boundary);
    CHECK(r.label == Region::II);

    CHECK(classify_region(1.0, 1.0 + 1e-9).shape != HazardShape::boundary);
    CHECK_THROWS_AS(classify_region(0.0, 1.0), invalid_parameter);
}

TEST_CASE("sign_scan examples", "[shape]")
{
    auto scan = sign_scan(2, 2, 1e3, 1000);
    CHECK(scan.sign_changes.empty());
    for (double s : scan.s_values) {
        CHECK(s > 0.0);
    }

    scan = sign_scan(0.5, 0.5, 1e3, 1000);
    CHECK(scan.sign_changes.empty());
    for (double s : scan.s_values) {
        CHECK(s < 0.0);
    }

    scan = sign_scan(4, 0.3, 1e6, 4096);
    REQUIRE(scan.sign_changes.size() == 1);
    CHECK(scan.sign_changes.front().direction == -1);

    scan = sign_scan(3, 0.5, 1e6, 4096);
    REQUIRE(scan.sign_changes.size() == 1);
    CHECK(scan.sign_changes.front().direction == -1);

    scan = sign_scan(0.2, 2, 1e6, 4096);
    CHECK(scan.count(+1) >= 1);

    CHECK_THROWS_AS(sign_scan(2, 2, 1.0, 100), invalid_parameter);
    CHECK_THROWS_AS(sign_scan(2, 2, 10.0, 1), invalid_parameter);
}

TEST_CASE("sign_scan grid invariants", "[shape]")
{
    const auto scan = sign_scan(0.3, 1.8, 1e6, 2048);
    REQUIRE(scan.z_grid.size() == 2048);
    for (std::size_t i = 0; i < scan.z_grid.size(); ++i) {
        CHECK(scan.offsets[i] > 0.0);
        CHECK(scan.z_grid[i] >= 1.0);
        if (i > 0) {
            CHECK(scan.offsets[i] > scan.offsets[i - 1]);
        }
    }
    CHECK(scan.z_grid.back() >= 1e6);

    // Each recorded change sits between consecutive nonzero values of opposite sign.
    int changes = 0;
    int last = 0;
    for (double s : scan.s_values) {
        const int sign = (s > 0) - (s < 0);
        if (sign != 0 && last != 0 && sign != last) {
            ++changes;
        }
        if (sign != 0) {
            last = sign;
        }
    }
    CHECK(changes == static_cast<int>(scan.sign_changes.size()));
}

TEST_CASE("classify_shape and the region IV downgrade", "[shape]")
{
    const auto bath = classify_shape(0.2, 2.0);
    CHECK(bath.region.label == Region::IV);
    CHECK(bath.observed == HazardShape::bathtub);
    CHECK_FALSE(bath.warning);

    // A grid too narrow to reach the sign change: the label falls back to what
    // the scan shows.
    ScanOptions narrow;
    narrow.z_max = 3.0;
    narrow.offset_min = 0.5;
    narrow.auto_extend = false;
    const auto cut = classify_shape(0.2, 2.0, narrow);
    CHECK(cut.region.label == Region::IV);
    CHECK(cut.warning);
    CHECK(cut.region.shape != HazardShape::bathtub);
    CHECK(cut.region.shape == cut.observed);
    CHECK_FALSE(cut.note.empty());
}

TEST_CASE("hazard_curve", "[shape]")
{
    for (const auto& [x, h] : hazard_curve({1, 1, 2}, 10.0, 50)) {
        CHECK_THAT(h, WithinRel(0.5, 1e-12));
    }
    const auto ray = hazard_curve({1, 2, 1}, 5.0, 100);
    for (std::size_t i = 0; i < ray.size(); ++i) {
        CHECK_THAT(ray[i].second, WithinRel(2.0 * ray[i].first, 1e-12));
        if (i > 0) {
            CHECK(ray[i].second > ray[i - 1].second);
        }
    }
    // Unimodal: rises then falls.
    const auto uni = hazard_curve({3, 0.5, 1}, 20.0, 400);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < uni.size(); ++i) {
        if (uni[i].second > uni[peak].second) {
            peak = i;
        }
    }
    CHECK(peak > 0);
    CHECK(peak + 1 < uni.size());
    CHECK_THROWS_AS(hazard_curve({1, 1, 1}, 0.0, 10), invalid_parameter);
    CHECK_THROWS_AS(hazard_curve({1, 1, 1}, 1.0, 0), invalid_parameter);
}

TEST_CASE("monotone regions give monotone curves", "[shape]")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double b1 = 1.05 + 3.0 * u(rng);
        const double a1 = (1.05 + 3.0 * u(rng)) / b1;
        const auto up = hazard_curve({a1, b1, 1.0}, 4.0, 200);
        for (std::size_t k = 1; k < up.size(); ++k) {
            CHECK(up[k].second >= up[k - 1].second * (1 - 1e-12));
        }
        const double b2 = 0.1 + 0.85 * u(rng);
        const double a2 = (0.1 + 0.85 * u(rng)) / b2;
        const auto down = hazard_curve({a2, b2, 1.0}, 4.0, 200);
        for (std::size_t k = 1; k < down.size(); ++k) {
            CHECK(down[k].second <= down[k - 1].second * (1 + 1e-12));
        }
    }
}

TEST_CASE("shape does not depend on sigma", "[shape]")
{
    // Only (alpha, beta) enter; hazard curves in x / sigma coincide.
    const auto a = hazard_curve({0.3, 2.5, 1.0}, 3.0, 60);
    const auto b = hazard_curve({0.3, 2.5, 7.0}, 21.0, 60);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK_THAT(b[i].second * 7.0, WithinRel(a[i].second, 1e-12));
    }
}

TEST_CASE("sign of s matches the hazard derivative", "[shape]")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> lg(-1.0, 1.0);
    std::uniform_real_distribution<double> q(0.02, 0.98);
    int compared = 0;
    for (int i = 0; i < 300; ++i) {
        const Theta t{std::pow(10.0, lg(rng)), std::pow(10.0, lg(rng)), std::pow(10.0, lg(rng))};
        const double x = ewd_quantile(q(rng), t);
        const double dh = oracle::derivative([&](double v) { return ewd_hazard(v, t); }, x, 1e-4 * x);
        if (std::abs(dh) < 1e-6 * ewd_hazard(x, t) / x) {
            continue;
        }
        // z - 1 = expm1(u) keeps the offset when z itself rounds to 1.
        const double v = std::expm1(std::pow(x / t.sigma, t.beta));
        ++compared;
        CHECK((s_scaled_from_offset(v, t.alpha, t.beta) > 0) == (dh > 0));
    }
    CHECK(compared > 250);
}

TEST_CASE("CSV output", "[shape]")
{
    std::ostringstream os;
    write_csv(os, "x", "h", {{1.0, 2.0}, {3.0, 4.5}});
    CHECK(os.str() == "x,h\n1,2\n3,4.5\n");

    std::ostringstream scan_csv;
    write_csv(scan_csv, sign_scan(2, 2, 10.0, 5));
    std::istringstream in(scan_csv.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
    }
    CHECK(lines == 6);
    CHECK(scan_csv.str().rfind("z_minus_1,z,s_scaled\n", 0) == 0);
}
