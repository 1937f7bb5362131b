#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slidemil/colormap.hpp"
#include "slidemil/errors.hpp"
#include "slidemil/heatmap.hpp"
#include "slidemil/rng.hpp"

using namespace slidemil;

namespace {

HeatmapSpec unit_spec(int patch = 8, int downsample = 1) {
    HeatmapSpec spec;
    spec.patch_px = patch;
    spec.stride_px = patch / 2;
    spec.downsample = downsample;
    spec.norm = AttentionNorm::MinMax;
    spec.opacity = 1.0;
    return spec;
}

}  // namespace

TEST_CASE("single patch renders a uniform max-colour rectangle") {
    const auto spec = unit_spec(8);
    const RgbTile out = render_heatmap({{4, 4}}, {1.0}, {16, 16}, spec);
    const auto top = colormap_lookup(1.0);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const bool inside = x >= 4 && x < 12 && y >= 4 && y < 12;
            if (inside) {
                CHECK(out.at(x, y, 0) == top[0]);
                CHECK(out.at(x, y, 1) == top[1]);
                CHECK(out.at(x, y, 2) == top[2]);
            } else {
                CHECK(out.at(x, y, 0) == 255);  // white background
            }
        }
    }
}

TEST_CASE("two non-overlapping equal-attention patches share a colour") {
    const auto spec = unit_spec(4);
    const RgbTile out = render_heatmap({{0, 0}, {8, 8}}, {0.5, 0.5}, {16, 16}, spec);
    CHECK(out.at(1, 1, 0) == out.at(9, 9, 0));
    CHECK(out.at(1, 1, 1) == out.at(9, 9, 1));
    CHECK(out.at(1, 1, 2) == out.at(9, 9, 2));
}

TEST_CASE("overlap strip averages the attention of its covering patches") {
    // Patches at x=0 and x=4 with patch 8: overlap is x in [4, 8).
    const auto spec = unit_spec(8);
    const ScoreMap map = accumulate_score_map({{0, 0}, {4, 0}}, {0.25, 0.75}, {12, 8}, spec);
    CHECK(map.at(1, 2) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(map.at(5, 2) == doctest::Approx(0.5).epsilon(1e-15));   // mean of both
    CHECK(map.at(9, 2) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(!std::isnan(map.at(0, 7)));  // bottom row still covered (y < 8)
}

TEST_CASE("geometry and shape errors") {
    const auto spec = unit_spec(8);
    SUBCASE("patch outside the slide") {
        CHECK_THROWS_AS(render_heatmap({{12, 0}}, {1.0}, {16, 16}, spec), geometry_error);
    }
    SUBCASE("no patches") {
        CHECK_THROWS_AS(render_heatmap({}, {}, {16, 16}, spec), shape_error);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(render_heatmap({{0, 0}}, {0.5, 0.5}, {16, 16}, spec), shape_error);
    }
    SUBCASE("background must match the canvas") {
        const RgbTile wrong(3, 3);
        CHECK_THROWS_AS(render_heatmap({{0, 0}}, {1.0}, {16, 16}, spec, wrong), geometry_error);
    }
    SUBCASE("stride must divide patch") {
        HeatmapSpec bad = spec;
        bad.stride_px = 3;
        CHECK_THROWS_AS(render_heatmap({{0, 0}}, {1.0}, {16, 16}, bad), config_error);
    }
}

TEST_CASE("covered pixels are exactly the union of patch rectangles") {
    const auto spec = unit_spec(4, 2);  // downsampled canvas
    const std::vector<std::array<std::uint32_t, 2>> coords = {{0, 0}, {4, 4}, {8, 2}};
    const std::vector<double> attention = {0.2, 0.5, 0.3};
    const ScoreMap map = accumulate_score_map(coords, attention, {16, 12}, spec);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            bool covered = false;
            for (const auto& c : coords) {
                const int x0 = static_cast<int>(c[0]) / 2, y0 = static_cast<int>(c[1]) / 2;
                const int x1 = (static_cast<int>(c[0]) + 4 + 1) / 2, y1 = (static_cast<int>(c[1]) + 4 + 1) / 2;
                if (x >= x0 && x < x1 && y >= y0 && y < y1) covered = true;
            }
            CHECK(std::isnan(map.at(x, y)) == !covered);
        }
    }
}

TEST_CASE("render is invariant under permutation of the patches") {
    Rng rng(5);
    std::vector<std::array<std::uint32_t, 2>> coords;
    std::vector<double> attention;
    for (int i = 0; i < 6; ++i) {
        coords.push_back({static_cast<std::uint32_t>(rng.uniform_int(12)) * 4,
                          static_cast<std::uint32_t>(rng.uniform_int(12)) * 4});
        attention.push_back(rng.uniform());
    }
    double total = 0.0;
    for (double a : attention) total += a;
    for (double& a : attention) a /= total;

    const auto spec = unit_spec(8, 2);
    const RgbTile base = render_heatmap(coords, attention, {64, 64}, spec);
    std::vector<std::size_t> perm = {3, 1, 5, 0, 4, 2};
    std::vector<std::array<std::uint32_t, 2>> coords2;
    std::vector<double> attention2;
    for (auto i : perm) {
        coords2.push_back(coords[i]);
        attention2.push_back(attention[i]);
    }
    const RgbTile permuted = render_heatmap(coords2, attention2, {64, 64}, spec);
    CHECK(base == permuted);
}

TEST_CASE("minmax normalisation puts the top colour inside the top patch") {
    const auto spec = unit_spec(4);
    const std::vector<std::array<std::uint32_t, 2>> coords = {{0, 0}, {8, 0}, {0, 8}};
    const std::vector<double> attention = {0.2, 0.7, 0.1};
    const RgbTile out = render_heatmap(coords, attention, {16, 16}, spec);
    const auto top = colormap_lookup(1.0);
    CHECK(out.at(9, 1, 0) == top[0]);
    CHECK(out.at(9, 1, 1) == top[1]);
    CHECK(out.at(9, 1, 2) == top[2]);
}

TEST_CASE("opacity blends over a supplied background") {
    HeatmapSpec spec = unit_spec(8);
    spec.opacity = 0.5;
    RgbTile bg(16, 16);
    for (auto& v : bg.pixels) v = 100;
    const RgbTile out = render_heatmap({{0, 0}}, {1.0}, {16, 16}, spec, bg);
    const auto top = colormap_lookup(1.0);
    CHECK(out.at(1, 1, 0) == std::lround(0.5 * top[0] + 0.5 * 100));
    CHECK(out.at(14, 14, 0) == 100);  // uncovered keeps the background
}

TEST_CASE("attention stats") {
    const std::vector<double> a = {0.5, 0.25, 0.25};
    const auto stats = attention_stats(a);
    CHECK(stats.min == 0.25);
    CHECK(stats.max == 0.5);
    const double expected = -(0.5 * std::log(0.5) + 2 * 0.25 * std::log(0.25));
    CHECK(stats.entropy == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sidecar file records spec and stats") {
    const auto dir = std::filesystem::temp_directory_path() / "slidemil_heatmap";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "sidecar.txt").string();
    write_heatmap_sidecar(path, "slideX", unit_spec(), attention_stats({0.4, 0.6}), 2);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("slide_id=slideX") != std::string::npos);
    CHECK(text.find("colormap=viridis") != std::string::npos);
    CHECK(text.find("attention_max=0.6") != std::string::npos);
}

TEST_CASE("viridis lookup endpoints") {
    const auto lo = colormap_lookup(0.0);
    const auto hi = colormap_lookup(1.0);
    CHECK(static_cast<int>(lo[0]) == 68);
    CHECK(static_cast<int>(lo[2]) == 84);
    CHECK(static_cast<int>(hi[0]) == 253);
    CHECK(static_cast<int>(hi[2]) == 37);
}
