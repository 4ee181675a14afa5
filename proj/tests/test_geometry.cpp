#include <catch2/catch_amalgamated.hpp>

#include "geoloc/geojson.hpp"
#include "geoloc/geometry.hpp"
#include "test_support.hpp"

#include <fstream>
#include <set>

using namespace geoloc;
using namespace testsupport;

TEST_CASE("haversine basics") {
    const GeoPoint a{35.0, -80.0};
    CHECK(haversine(a, a) == 0.0);

    // analytic oracle: antipodal pair is pi*R, quarter circumference pi*R/2
    const double half_circumference = kPi * kEarthRadiusKm;
    CHECK_THAT(haversine({0, 0}, {0, -180}), Catch::Matchers::WithinAbs(half_circumference, 1e-6));
    CHECK_THAT(haversine({0, 0}, {0, -180}), Catch::Matchers::WithinAbs(20015.114442035923, 1e-6));
    CHECK_THAT(haversine({0, 0}, {0, 90}), Catch::Matchers::WithinAbs(half_circumference / 2, 1e-6));
    CHECK_THAT(haversine({0, 0}, {0, 90}), Catch::Matchers::WithinAbs(10007.557221017962, 1e-6));
    CHECK_THAT(haversine({0, 0}, {90, 0}), Catch::Matchers::WithinAbs(half_circumference / 2, 1e-6));
}

TEST_CASE("haversine is a metric on random triples") {
    Rng rng(7);
    for (int trial = 0; trial < 10000; ++trial) {
        const GeoPoint a{rng.uniform(-90, 90), rng.uniform(-180, 180)};
        const GeoPoint b{rng.uniform(-90, 90), rng.uniform(-180, 180)};
        const GeoPoint c{rng.uniform(-90, 90), rng.uniform(-180, 180)};
        const double ab = haversine(a, b), ba = haversine(b, a);
        const double bc = haversine(b, c), ac = haversine(a, c);
        REQUIRE(ab == ba);  // symmetry is exact: same expression both ways
        REQUIRE(ab >= 0.0);
        REQUIRE(ab <= kPi * kEarthRadiusKm + 1e-9);
        REQUIRE(ac <= ab + bc + 1e-6);
    }
}

TEST_CASE("point_in_domain on the unit square") {
    const Domain square = box_domain(0, 0, 1, 1);
    CHECK(point_in_domain(square, {0.5, 0.5}));
    CHECK_FALSE(point_in_domain(square, {2, 2}));
    CHECK_FALSE(point_in_domain(square, {-0.5, 0.5}));
    // points exactly on an edge or vertex count as inside
    CHECK(point_in_domain(square, {0.0, 0.5}));
    CHECK(point_in_domain(square, {1.0, 1.0}));
    CHECK(point_in_domain(square, {0.5, 0.0}));
}

TEST_CASE("point_in_domain honors holes (even-odd)") {
    const Domain holed({box_ring(0, 0, 4, 4), box_ring(1, 1, 3, 3)}, {false, true});
    CHECK(point_in_domain(holed, {0.5, 0.5}));
    CHECK_FALSE(point_in_domain(holed, {2, 2}));        // inside the hole
    CHECK(point_in_domain(holed, {1.0, 2.0}));          // on the hole boundary counts inside
    CHECK(holed.area_km2() < box_area_km2(0, 0, 4, 4));
    CHECK_THAT(holed.area_km2(),
               Catch::Matchers::WithinRel(box_area_km2(0, 0, 4, 4) - box_area_km2(1, 1, 3, 3), 1e-12));
}

TEST_CASE("domain area matches the analytic box area") {
    const Domain box = box_domain(10, -30, 35, 20);
    CHECK_THAT(box.area_km2(), Catch::Matchers::WithinRel(box_area_km2(10, -30, 35, 20), 1e-12));
    const Domain ring(Ring{{-5, 0}, {5, 10}, {15, 0}, {5, -10}, {-5, 0}});  // diamond
    CHECK(ring.area_km2() > 0);
}

TEST_CASE("domain validation") {
    CHECK_THROWS_AS(Domain(Ring{{0, 0}, {1, 1}, {0, 0}}), std::invalid_argument);  // < 3 edges
    Ring open = box_ring(0, 0, 1, 1);
    open.pop_back();
    CHECK_THROWS_AS(Domain(open), std::invalid_argument);  // unclosed
    CHECK_THROWS_AS(Domain(Ring{{0, 200}, {1, 200}, {1, 201}, {0, 200}}), std::invalid_argument);
}

TEST_CASE("sample_uniform basics") {
    const Domain box = box_domain(20, -10, 40, 15);
    Rng rng(42);
    CHECK_THROWS_AS(sample_uniform(box, rng, 0), std::invalid_argument);
    const auto one = sample_uniform(box, rng, 1);
    REQUIRE(one.size() == 1);
    CHECK(point_in_domain(box, one[0]));
}

TEST_CASE("sample_uniform determinism") {
    const Domain box = box_domain(20, -10, 40, 15);
    Rng a(42), b(42);
    const auto pa = sample_uniform(box, a, 500);
    const auto pb = sample_uniform(box, b, 500);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].lat == pb[i].lat);
        REQUIRE(pa[i].lon == pb[i].lon);
    }
}

TEST_CASE("sample_uniform density is uniform per spherical area") {
    // lat band [0, 60]: the fraction above lat 30 is the spherical-cap ratio
    const Domain band = box_domain(0, -20, 60, 20);
    Rng rng(11);
    const auto pts = sample_uniform(band, rng, 100000);
    std::size_t above = 0;
    for (const auto& p : pts) above += p.lat > 30.0 ? 1 : 0;
    const double want = (std::sin(deg2rad(60)) - std::sin(deg2rad(30))) / std::sin(deg2rad(60));
    CHECK_THAT(static_cast<double>(above) / static_cast<double>(pts.size()),
               Catch::Matchers::WithinAbs(want, 0.01));
}

TEST_CASE("sample_uniform rejects degenerate domains") {
    // sliver occupying ~1e-7 of its bounding box
    std::vector<Ring> rings{box_ring(0, 0, 0.0001, 0.001)};
    Ring far_box = box_ring(50, 99.999, 50.001, 100);
    Domain sliver({rings[0], far_box}, {false, false});
    Rng rng(3);
    CHECK_THROWS_WITH(sample_uniform(sliver, rng, 10), Catch::Matchers::ContainsSubstring("acceptance rate"));
}

TEST_CASE("assign_tile identity, ties, and the brute-force oracle") {
    const Domain box = box_domain(0, 0, 10, 10);
    Rng rng(5);
    VoronoiPartition part = make_partition(box, 8, rng, 1000);

    SECTION("a point equal to a seed maps to that seed") {
        for (std::size_t i = 0; i < part.seeds.size(); ++i)
            CHECK(assign_tile(part, part.seeds[i]) == i);
    }

    SECTION("equidistant point takes the lower seed index") {
        VoronoiPartition mirror;
        mirror.seeds = {GeoPoint{2, -1}, GeoPoint{2, 1}};
        mirror.rebuild_units();
        mirror.areas_km2 = {1, 1};
        // equidistant from both seeds by mirror symmetry in lon
        CHECK(assign_tile(mirror, {2, 0}) == 0);
        CHECK(assign_tile(mirror, {7, 0}) == 0);
    }

    SECTION("1000 random points agree with the exhaustive haversine scan") {
        for (int t = 0; t < 1000; ++t) {
            const GeoPoint s{rng.uniform(0, 10), rng.uniform(0, 10)};
            REQUIRE(assign_tile(part, s) == nearest_seed_bruteforce(part.seeds, s));
        }
    }
}

TEST_CASE("planar metric differs from great-circle where expected") {
    VoronoiPartition part;
    part.seeds = {GeoPoint{60, 0}, GeoPoint{60, 8}};
    part.metric = SeedMetric::planar;
    part.rebuild_units();
    // at lat 60, lon degrees shrink by cos(60)=0.5 in km; planar ignores that
    const GeoPoint probe{59.0, 4.4};
    CHECK(assign_tile(part, probe) == 1);
    part.metric = SeedMetric::great_circle;
    CHECK(assign_tile(part, probe) == nearest_seed_bruteforce(part.seeds, probe));
}

TEST_CASE("estimate_areas") {
    const Domain box = box_domain(-5, -5, 5, 5);

    SECTION("K=1 degenerate call returns the full domain area") {
        VoronoiPartition part;
        part.seeds = {GeoPoint{0, 0}};
        part.rebuild_units();
        Rng rng(1);
        const auto areas = estimate_areas(box, part, 100, rng);
        REQUIRE(areas.size() == 1);
        CHECK_THAT(areas[0], Catch::Matchers::WithinRel(box.area_km2(), 1e-12));
    }

    SECTION("mirrored seeds split a symmetric domain in half, within 3 sigma") {
        VoronoiPartition part;
        part.seeds = {GeoPoint{0, -2}, GeoPoint{0, 2}};
        part.rebuild_units();
        Rng rng(2);
        const std::uint32_t mc = 100000;
        const auto areas = estimate_areas(box, part, mc, rng);
        const double sigma = box.area_km2() * std::sqrt(0.25 / mc);
        CHECK_THAT(areas[0], Catch::Matchers::WithinAbs(box.area_km2() / 2, 3 * sigma));
        CHECK_THAT(areas[1], Catch::Matchers::WithinAbs(box.area_km2() / 2, 3 * sigma));
    }

    SECTION("areas sum to the domain area exactly when every tile is hit") {
        Rng rng(3);
        const VoronoiPartition part = make_partition(box, 5, rng, 50000);
        double sum = 0;
        for (double a : part.areas_km2) sum += a;
        CHECK_THAT(sum, Catch::Matchers::WithinRel(box.area_km2(), 1e-9));
    }

    SECTION("mc_points below 10K is rejected") {
        Rng rng(4);
        VoronoiPartition part;
        part.seeds = sample_uniform(box, rng, 20);
        part.rebuild_units();
        CHECK_THROWS_AS(estimate_areas(box, part, 100, rng), std::invalid_argument);
    }
}

TEST_CASE("make_partition determinism and seed count") {
    const Domain box = box_domain(0, 0, 20, 20);
    Rng a(9), b(9);
    const VoronoiPartition pa = make_partition(box, 12, a, 20000);
    const VoronoiPartition pb = make_partition(box, 12, b, 20000);
    REQUIRE(pa.seeds.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(pa.seeds[i] == pb.seeds[i]);
        CHECK(pa.areas_km2[i] == pb.areas_km2[i]);
    }
    CHECK_THROWS_AS(make_partition(box, 1, a, 1000), std::invalid_argument);
}

TEST_CASE("grid construction and coverage") {
    const Domain box = box_domain(10, 10, 12, 13);
    const Grid grid(box, 0.1);
    REQUIRE(grid.size() > 0);
    for (const GeoPoint& c : grid.centers()) CHECK(point_in_domain(box, c));
    for (double a : grid.cell_areas_km2()) CHECK(a > 0);
    CHECK_THAT(grid.total_area_km2(), Catch::Matchers::WithinRel(box.area_km2(), 0.02));

    SECTION("cell_at inverts cell centers") {
        for (std::size_t c = 0; c < grid.size(); ++c)
            REQUIRE(grid.cell_at(grid.centers()[c]) == static_cast<std::int32_t>(c));
    }

    SECTION("every in-domain grid cell gets exactly one tile") {
        Rng rng(13);
        const VoronoiPartition part = make_partition(box, 7, rng, 5000);
        std::set<std::uint32_t> used;
        for (const GeoPoint& c : grid.centers()) {
            const std::uint32_t t = assign_tile(part, c);
            REQUIRE(t < part.tile_count());
            used.insert(t);
        }
        CHECK(used.size() > 1);
    }
}

TEST_CASE("grid respects domain holes") {
    const Domain holed({box_ring(0, 0, 4, 4), box_ring(1, 1, 3, 3)}, {false, true});
    const Grid grid(holed, 0.2);
    for (const GeoPoint& c : grid.centers()) {
        const bool in_hole = c.lat > 1 && c.lat < 3 && c.lon > 1 && c.lon < 3;
        REQUIRE_FALSE(in_hole);
    }
    CHECK_THAT(grid.total_area_km2(), Catch::Matchers::WithinRel(holed.area_km2(), 0.02));
}

TEST_CASE("geojson round trip and keyed polygons") {
    TempDir tmp;
    SECTION("polygon with a hole") {
        const std::string path = tmp.file("holed.geojson");
        std::ofstream out(path);
        out << R"({"type":"Polygon","coordinates":[
            [[0,0],[4,0],[4,4],[0,4],[0,0]],
            [[1,1],[3,1],[3,3],[1,3],[1,1]]]})";
        out.close();
        const Domain d = load_domain_geojson(path);
        CHECK(d.contains({0.5, 0.5}));
        CHECK_FALSE(d.contains({2, 2}));
    }
    SECTION("multipolygon feature") {
        const std::string path = tmp.file("multi.geojson");
        std::ofstream out(path);
        out << R"({"type":"Feature","geometry":{"type":"MultiPolygon","coordinates":[
            [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
            [[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}})";
        out.close();
        const Domain d = load_domain_geojson(path);
        CHECK(d.contains({0.5, 0.5}));
        CHECK(d.contains({5.5, 5.5}));
        CHECK_FALSE(d.contains({3, 3}));
    }
    SECTION("keyed polygon collection") {
        const std::string path = tmp.file("areas.geojson");
        std::ofstream out(path);
        out << R"({"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"polygon_id":"A"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[2,2],[0,2],[0,0]]]}},
            {"type":"Feature","properties":{"polygon_id":"B"},
             "geometry":{"type":"Polygon","coordinates":[[[2,0],[4,0],[4,2],[2,2],[2,0]]]}}]})";
        out.close();
        const auto polys = load_keyed_polygons(path);
        REQUIRE(polys.size() == 2);
        CHECK(polys.at("A").contains({1, 1}));
        CHECK(polys.at("B").contains({1, 3}));
    }
    SECTION("domain_to_geojson round trips membership") {
        const Domain holed({box_ring(0, 0, 4, 4), box_ring(1, 1, 3, 3)}, {false, true});
        const std::string path = tmp.file("rt.geojson");
        std::ofstream out(path);
        out << domain_to_geojson(holed).dump();
        out.close();
        const Domain back = load_domain_geojson(path);
        CHECK(back.contains({0.5, 0.5}));
        CHECK_FALSE(back.contains({2, 2}));
        CHECK_THAT(back.area_km2(), Catch::Matchers::WithinRel(holed.area_km2(), 1e-12));
    }
}

TEST_CASE("continental US domain loads with a plausible area") {
    const Domain us = load_domain_geojson(data_file("us_continental.geojson"));
    CHECK(us.area_km2() > 7.0e6);
    CHECK(us.area_km2() < 9.0e6);
    CHECK(us.contains({39.0, -98.0}));       // Kansas
    CHECK_FALSE(us.contains({25.0, -100.0}));  // Mexico
    CHECK_FALSE(us.contains({52.0, -100.0}));  // Canada
}
