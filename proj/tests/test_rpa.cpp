#include <doctest.h>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tractpipe/metrics.hpp"
#include "tractpipe/phantom.hpp"
#include "tractpipe/rpa.hpp"

using namespace tractpipe;

namespace {

PhantomConfig small_phantom() {
  PhantomConfig pc;
  pc.dims = Dims{16, 16, 16};
  pc.tube_radius = 2.0;
  pc.noise_sigma = 0.0;
  pc.cohort_size = 5;
  pc.n_test = 1;
  pc.seed = 21;
  return pc;
}

RegistrationConfig quick_registration() {
  RegistrationConfig rc;
  rc.max_iters = 40;
  return rc;
}

}  // namespace

TEST_SUITE("rpa") {
  TEST_CASE("index tags are zero padded") {
    CHECK(index_tag(0) == "000");
    CHECK(index_tag(7) == "007");
    CHECK(index_tag(42) == "042");
    CHECK(index_tag(1234) == "1234");
  }

  TEST_CASE("self-registration reproduces the labeled subject") {
    const auto pc = small_phantom();
    const auto atlas = generate_atlas(pc);
    const LabeledSubject lab{"a", atlas.peaks, atlas.truth};
    const UnlabeledSubject self{"a", atlas.peaks};
    const auto p = synthesize_pseudo_pair(lab, self, quick_registration());
    for (int k = 0; k < atlas.truth.channels(); ++k) CHECK(dice(p.labels, atlas.truth, k) == 1.0);
    CHECK(p.field.max_norm() == 0.0);
    CHECK(p.source_unlabeled_id == "a");
  }

  TEST_CASE("zero iterations leave the pair unchanged") {
    const auto cohort = generate_cohort(generate_atlas(small_phantom()), small_phantom());
    auto rc = quick_registration();
    rc.max_iters = 0;
    const auto p = synthesize_pseudo_pair(cohort.labeled, cohort.unlabeled[0], rc);
    CHECK(p.peaks == cohort.labeled.peaks);
    CHECK(p.labels == cohort.labeled.labels);
  }

  TEST_CASE("one pseudo subject per unlabeled subject, in order") {
    const auto pc = small_phantom();
    const auto cohort = generate_cohort(generate_atlas(pc), pc);
    REQUIRE(cohort.unlabeled.size() == 3);
    TempDir dir("tp_rpa");
    const auto pseudo =
        build_pseudo_dataset(cohort.labeled, cohort.unlabeled, quick_registration(), 2, dir.path());
    REQUIRE(pseudo.size() == cohort.unlabeled.size());
    for (std::size_t i = 0; i < pseudo.size(); ++i) {
      CHECK(pseudo[i].source_unlabeled_id == cohort.unlabeled[i].id);
      CHECK(pseudo[i].peaks.dims() == pc.dims);
      CHECK(is_binary(pseudo[i].labels));
      CHECK(pseudo[i].loss_trace.back() <= pseudo[i].loss_trace.front());
      // Fields are stored as f32.
      const auto stored = load_field(dir.path() / ("field_" + index_tag(i)));
      REQUIRE(stored.size() == pseudo[i].field.size());
      for (std::size_t j = 0; j < stored.size(); ++j) {
        REQUIRE(stored.data()[j] == static_cast<double>(static_cast<float>(pseudo[i].field.data()[j])));
      }
    }
  }

  TEST_CASE("job count does not change the result") {
    const auto pc = small_phantom();
    const auto cohort = generate_cohort(generate_atlas(pc), pc);
    const auto one = build_pseudo_dataset(cohort.labeled, cohort.unlabeled, quick_registration(), 1);
    const auto three = build_pseudo_dataset(cohort.labeled, cohort.unlabeled, quick_registration(), 3);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one[i].peaks == three[i].peaks);
      CHECK(one[i].labels == three[i].labels);
      CHECK(one[i].field == three[i].field);
    }
  }

  TEST_CASE("duplicated unlabeled subjects give identical pairs") {
    const auto pc = small_phantom();
    const auto cohort = generate_cohort(generate_atlas(pc), pc);
    const std::vector<UnlabeledSubject> twice{cohort.unlabeled[0], cohort.unlabeled[0]};
    const auto p = build_pseudo_dataset(cohort.labeled, twice, quick_registration());
    CHECK(p[0].peaks == p[1].peaks);
    CHECK(p[0].labels == p[1].labels);
  }

  TEST_CASE("registration moves labels toward the hidden truth") {
    const auto pc = small_phantom();
    const auto cohort = generate_cohort(generate_atlas(pc), pc);
    auto rc = quick_registration();
    rc.max_iters = 200;
    const auto p = synthesize_pseudo_pair(cohort.labeled, cohort.unlabeled[1], rc);
    double before = 0.0, after = 0.0;
    for (int k = 0; k < pc.n_tracts; ++k) {
      before += dice(cohort.labeled.labels, cohort.unlabeled_truth[1], k);
      after += dice(p.labels, cohort.unlabeled_truth[1], k);
    }
    CHECK(after > before);
  }

  TEST_CASE("input errors") {
    const auto pc = small_phantom();
    const auto cohort = generate_cohort(generate_atlas(pc), pc);
    CHECK_THROWS_AS(build_pseudo_dataset(cohort.labeled, {}, quick_registration()), ConfigError);
    const UnlabeledSubject wrong{"w", RealVolume(Dims{8, 8, 8}, 3)};
    CHECK_THROWS_AS(synthesize_pseudo_pair(cohort.labeled, wrong, quick_registration()), ShapeError);
  }
}
