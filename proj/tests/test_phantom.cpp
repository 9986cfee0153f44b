#include <doctest.h>

#include <cmath>

#include "tractpipe/phantom.hpp"

using namespace tractpipe;

namespace {

PhantomConfig tiny() {
  PhantomConfig pc;
  pc.dims = Dims{16, 14, 12};
  pc.tube_radius = 2.0;
  pc.cohort_size = 6;
  pc.n_test = 2;
  pc.seed = 3;
  return pc;
}

}  // namespace

TEST_SUITE("phantom") {
  TEST_CASE("a straight line along x carries direction (1, 0, 0)") {
    const std::vector<Centerline> lines{{{0.0, 5.0, 5.0}, {11.0, 5.0, 5.0}}};
    const auto s = rasterize_tracts(Dims{12, 11, 11}, lines, 2.0);
    for (int z = 0; z < 11; ++z)
      for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 12; ++x) {
          const double d = std::hypot(y - 5.0, z - 5.0);
          const bool inside = d <= 2.0;
          REQUIRE(s.truth.at(x, y, z, 0) == (inside ? 1 : 0));
          const auto p = s.peaks.voxel(x, y, z);
          if (inside) {
            REQUIRE(p[0] == doctest::Approx(1.0));
            REQUIRE(p[1] == doctest::Approx(0.0));
            REQUIRE(p[2] == doctest::Approx(0.0));
          } else {
            REQUIRE(p[0] == 0.0f);
          }
        }
  }

  TEST_CASE("overlapping tubes fill peak slots nearest-first") {
    const std::vector<Centerline> lines{{{0.0, 4.0, 4.0}, {8.0, 4.0, 4.0}},
                                        {{4.0, 0.0, 4.0}, {4.0, 8.0, 4.0}}};
    const auto s = rasterize_tracts(Dims{9, 9, 9}, lines, 2.0, 6);
    // (4, 5, 4): distance 1 from the x-line, 0 from the y-line.
    const auto p = s.peaks.voxel(4, 5, 4);
    CHECK(std::abs(p[1]) == doctest::Approx(1.0));
    CHECK(std::abs(p[3]) == doctest::Approx(1.0));
    CHECK(s.truth.at(4, 5, 4, 0) == 1);
    CHECK(s.truth.at(4, 5, 4, 1) == 1);
  }

  TEST_CASE("atlas peaks are unit vectors wherever a tract is present") {
    const auto atlas = generate_atlas(tiny());
    CHECK(atlas.truth.channels() == 3);
    CHECK(atlas.peaks.channels() == 3);
    for (int z = 0; z < 12; ++z)
      for (int y = 0; y < 14; ++y)
        for (int x = 0; x < 16; ++x) {
          bool any = false;
          for (int k = 0; k < 3; ++k) any = any || atlas.truth.at(x, y, z, k) == 1;
          const auto p = atlas.peaks.voxel(x, y, z);
          const double n = std::sqrt(double(p[0]) * p[0] + double(p[1]) * p[1] + double(p[2]) * p[2]);
          REQUIRE(n == doctest::Approx(any ? 1.0 : 0.0).epsilon(1e-5));
        }
    for (int k = 0; k < 3; ++k) {
      std::size_t count = 0;
      for (std::size_t i = static_cast<std::size_t>(k); i < atlas.truth.size(); i += 3)
        count += atlas.truth.data()[i];
      CHECK(count > 0);
    }
  }

  TEST_CASE("generation is deterministic in the seed") {
    const auto a = generate_atlas(tiny());
    CHECK(generate_atlas(tiny()).peaks == a.peaks);
    auto other = tiny();
    other.seed = 4;
    CHECK_FALSE(generate_atlas(other).truth == a.truth);
    const auto c1 = generate_cohort(a, tiny());
    const auto c2 = generate_cohort(a, tiny());
    CHECK(c1.labeled.peaks == c2.labeled.peaks);
    for (std::size_t i = 0; i < c1.test.size(); ++i) CHECK(c1.test[i].peaks == c2.test[i].peaks);
  }

  TEST_CASE("smooth field amplitude") {
    const auto f = random_smooth_field(Dims{12, 12, 12}, 2.0, 4.0, 9);
    CHECK(f.max_norm() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(random_smooth_field(Dims{12, 12, 12}, 0.0, 4.0, 9).max_norm() == 0.0);
    CHECK(random_smooth_field(Dims{12, 12, 12}, 2.0, 4.0, 9) == f);
  }

  TEST_CASE("cohort sizes") {
    const auto pc = tiny();
    const auto c = generate_cohort(generate_atlas(pc), pc);
    CHECK(c.unlabeled.size() == 3);
    CHECK(c.unlabeled_truth.size() == 3);
    CHECK(c.test.size() == 2);
    CHECK(c.labeled.id == "labeled_000");
    CHECK(c.unlabeled[2].id == "unlabeled_002");
    CHECK(c.test[1].id == "test_001");

    PhantomConfig full;
    full.dims = Dims{8, 8, 8};
    full.tube_radius = 1.5;
    const auto d = generate_cohort(generate_atlas(full), full);
    CHECK(d.unlabeled.size() == 10);
    CHECK(d.test.size() == 5);
  }

  TEST_CASE("no deformation and no noise gives identical members") {
    auto pc = tiny();
    pc.deform_amplitude = 0.0;
    pc.noise_sigma = 0.0;
    const auto atlas = generate_atlas(pc);
    const auto c = generate_cohort(atlas, pc);
    CHECK(c.labeled.peaks == atlas.peaks);
    CHECK(c.labeled.labels == atlas.truth);
    for (const auto& u : c.unlabeled) CHECK(u.peaks == atlas.peaks);
    for (const auto& t : c.test) CHECK(t.truth == atlas.truth);
  }

  TEST_CASE("noisy peaks stay bounded and labels binary") {
    auto pc = tiny();
    pc.noise_sigma = 0.3;
    const auto c = generate_cohort(generate_atlas(pc), pc);
    const float bound = static_cast<float>(1.0 + 3.0 * pc.noise_sigma);
    for (const auto& t : c.test) {
      CHECK(is_binary(t.truth));
      for (float v : t.peaks.data()) {
        REQUIRE(std::isfinite(v));
        REQUIRE(std::abs(v) <= bound);
      }
    }
  }

  TEST_CASE("config validation") {
    auto pc = tiny();
    pc.n_test = 6;
    CHECK_THROWS_AS(pc.validate(), ConfigError);
    pc = tiny();
    pc.peak_channels = 4;
    CHECK_THROWS_AS(pc.validate(), ConfigError);
    pc = tiny();
    pc.noise_sigma = -1.0;
    CHECK_THROWS_AS(pc.validate(), ConfigError);
    CHECK_THROWS_AS(rasterize_tracts(Dims{4, 4, 4}, {}, 1.0), ConfigError);
  }
}
