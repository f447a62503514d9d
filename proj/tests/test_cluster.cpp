#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "risnoma/cluster.hpp"
#include "risnoma/rng.hpp"

using namespace risnoma;

namespace {

CVector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.complex_normal();
  return v;
}

CMatrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = scale * rng.complex_normal();
  return m;
}

// One RIS, blocked direct links, a profile theta* in {+1,-1}^M with zero
// inter-cluster leakage for single-user clusters {0}, {1}.
struct ZeroLeakInstance {
  ChannelSet channels;
  BeamformerSet beams;
  ClusterAssignment assignment;
};

ZeroLeakInstance zero_leak_instance(std::uint64_t seed, Eigen::Index m, Eigen::Index nt) {
  Rng rng(seed);
  ZeroLeakInstance z;
  auto& ch = z.channels;
  ch.blocked_direct = {true, true};
  ch.bs_ris = {random_matrix(rng, m, nt)};
  ch.ris_user.resize(1);
  z.beams.vectors = {random_vector(rng, nt), random_vector(rng, nt)};
  CVector theta(m);
  for (Eigen::Index e = 0; e < m; ++e) theta(e) = rng.uniform() < 0.5 ? 1.0 : -1.0;
  for (int k = 0; k < 2; ++k) {
    ch.direct.push_back(CVector::Zero(nt));
    const CVector v = theta.cwiseProduct(ch.bs_ris[0] * z.beams.vectors[1 - k]);
    CVector cg = random_vector(rng, m);
    cg -= v.conjugate() * (v.transpose() * cg).value() / v.squaredNorm();
    ch.ris_user[0].push_back(cg.conjugate());
  }
  z.assignment.clusters = {{0}, {1}};
  return z;
}

// Leakage of a fixed profile, straight from the equivalent channels.
double leakage_of(const ChannelSet& ch, const ClusterAssignment& a, const BeamformerSet& bf, const RisProfile& p) {
  const std::vector<RisProfile> ps{p};
  double total = 0.0;
  for (std::size_t k = 0; k < ch.users(); ++k) {
    const CVector h = equivalent_channel(ch, k, ps);
    for (std::size_t j = 0; j < a.clusters.size(); ++j)
      if (j != a.cluster_of(k)) total += std::norm((h.transpose() * bf.vectors[j]).value());
  }
  return total;
}

}  // namespace

TEST_CASE("ClusterAssignment validation") {
  ClusterAssignment a;
  a.clusters = {{0, 2}, {1}};
  CHECK_NOTHROW(a.validate(3, 1));
  CHECK(a.cluster_of(2) == 0);
  CHECK(a.cluster_of(1) == 1);
  CHECK_THROWS_AS(a.cluster_of(5), std::out_of_range);

  ClusterAssignment bad = a;
  bad.clusters = {{0}, {}};
  CHECK_THROWS_AS(bad.validate(1, 1), std::invalid_argument);
  bad.clusters = {{0, 1}, {1}};
  CHECK_THROWS_AS(bad.validate(2, 1), std::invalid_argument);
  bad.clusters = {{0}};
  CHECK_THROWS_AS(bad.validate(2, 1), std::invalid_argument);
  bad.clusters = {{0, 3}};
  CHECK_THROWS_AS(bad.validate(2, 1), std::invalid_argument);
  bad.clusters = {{0}, {1}};
  bad.serving_ris = {0};
  CHECK_THROWS_AS(bad.validate(2, 2), std::invalid_argument);
  bad.serving_ris = {0, 2};
  CHECK_THROWS_AS(bad.validate(2, 2), std::invalid_argument);
  bad.serving_ris = {0, 1};
  CHECK_NOTHROW(bad.validate(2, 2));
}

TEST_CASE("centralized_cluster_design") {
  SUBCASE("single cluster: no leakage, the cluster gain is maximized") {
    Rng rng(1);
    ChannelSet ch;
    ch.blocked_direct = {false};
    ch.direct = {random_vector(rng, 1)};
    ch.bs_ris = {random_matrix(rng, 6, 1)};
    ch.ris_user = {{random_vector(rng, 6)}};
    BeamformerSet bf;
    bf.vectors = {CVector::Constant(1, cd(0.8, -0.3))};
    ClusterAssignment a;
    a.clusters = {{0}};
    const auto res = centralized_cluster_design(ch, a, bf);
    CHECK(res.leakage == 0.0);
    const double bound = coherent_bound(ch.direct[0](0), ch.ris_user[0][0], ch.bs_ris[0].col(0));
    CHECK(res.cluster_gains[0] == doctest::Approx(bound * bound * std::norm(bf.vectors[0](0))).epsilon(1e-10));
  }

  SUBCASE("single cluster with several users raises the weakest gain") {
    Rng rng(2);
    ChannelSet ch;
    ch.blocked_direct = {false, false, false};
    ch.bs_ris = {random_matrix(rng, 5, 2)};
    ch.ris_user.resize(1);
    for (int k = 0; k < 3; ++k) {
      ch.direct.push_back(random_vector(rng, 2, 0.3));
      ch.ris_user[0].push_back(random_vector(rng, 5));
    }
    BeamformerSet bf;
    bf.vectors = {random_vector(rng, 2)};
    ClusterAssignment a;
    a.clusters = {{0, 1, 2}};
    CentralizedOptions fixed;
    fixed.coordinate.max_sweeps = 0;
    const auto start = centralized_cluster_design(ch, a, bf, fixed);
    const auto res = centralized_cluster_design(ch, a, bf);
    CHECK(res.leakage == 0.0);
    CHECK(res.cluster_gains[0] >= start.cluster_gains[0]);
  }

  SUBCASE("zero leakage when an exhaustive discrete search certifies it") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      const auto z = zero_leak_instance(seed, 6, 2);
      double exhaustive = std::numeric_limits<double>::infinity(), signal_at_best = 0.0;
      for (int code = 0; code < 64; ++code) {
        std::vector<int> levels(6);
        for (int e = 0; e < 6; ++e) levels[static_cast<std::size_t>(e)] = (code >> e) & 1;
        const auto p = RisProfile::from_levels(levels, 1);
        const double l = leakage_of(z.channels, z.assignment, z.beams, p);
        if (l < exhaustive) {
          exhaustive = l;
          CentralizedOptions o;
          o.start = p;
          o.coordinate.max_sweeps = 0;
          signal_at_best = centralized_cluster_design(z.channels, z.assignment, z.beams, o).signal;
        }
      }
      REQUIRE(exhaustive < 1e-6 * signal_at_best);

      const auto res = centralized_cluster_design(z.channels, z.assignment, z.beams);
      CHECK(res.leakage < 1e-6 * res.signal);
      CHECK(res.leakage == doctest::Approx(leakage_of(z.channels, z.assignment, z.beams, res.profile)));
    }
  }

  SUBCASE("discrete design never leaks more than its start") {
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
      const auto z = zero_leak_instance(seed, 6, 2);
      CentralizedOptions o;
      o.bits = 2;
      const auto res = centralized_cluster_design(z.channels, z.assignment, z.beams, o);
      CHECK_NOTHROW(res.profile.validate());
      CHECK(res.leakage <= leakage_of(z.channels, z.assignment, z.beams, RisProfile::unit(6, 2)));
    }
  }

  SUBCASE("cluster labels do not change the objective") {
    Rng rng(3);
    ChannelSet ch;
    ch.blocked_direct = {true, true, true, true};
    ch.bs_ris = {random_matrix(rng, 8, 3)};
    ch.ris_user.resize(1);
    for (int k = 0; k < 4; ++k) {
      ch.direct.push_back(CVector::Zero(3));
      ch.ris_user[0].push_back(random_vector(rng, 8));
    }
    BeamformerSet bf;
    bf.vectors = {random_vector(rng, 3), random_vector(rng, 3), random_vector(rng, 3)};
    ClusterAssignment a;
    a.clusters = {{0, 3}, {1}, {2}};
    ClusterAssignment b;
    b.clusters = {{2}, {0, 3}, {1}};
    BeamformerSet bf_b;
    bf_b.vectors = {bf.vectors[2], bf.vectors[0], bf.vectors[1]};

    CentralizedOptions o;
    o.start = RisProfile::from_phases(std::vector<double>{0.1, 1.2, -2.0, 0.4, 3.0, -0.7, 2.2, 1.0});
    o.coordinate.max_sweeps = 0;
    const auto ra = centralized_cluster_design(ch, a, bf, o);
    const auto rb = centralized_cluster_design(ch, b, bf_b, o);
    CHECK(ra.leakage == doctest::Approx(rb.leakage).epsilon(1e-12));
    CHECK(ra.signal == doctest::Approx(rb.signal).epsilon(1e-12));
    CHECK(ra.cluster_gains[0] == doctest::Approx(rb.cluster_gains[1]).epsilon(1e-12));

    const auto da = centralized_cluster_design(ch, a, bf);
    const auto db = centralized_cluster_design(ch, b, bf_b);
    CHECK(da.leakage == doctest::Approx(db.leakage).epsilon(1e-6));
  }

  SUBCASE("unreachable gain floors are reported with a best-effort profile") {
    const auto z = zero_leak_instance(7, 4, 2);
    CentralizedOptions o;
    o.gain_floors = {1e9, 0.0};
    const auto res = centralized_cluster_design(z.channels, z.assignment, z.beams, o);
    CHECK_FALSE(res.floors_met);
    CHECK(res.warning.find("cluster 0") != std::string::npos);
    CHECK(res.profile.size() == 4);
  }

  SUBCASE("reachable floors are met") {
    const auto z = zero_leak_instance(8, 6, 2);
    CentralizedOptions fixed;
    fixed.coordinate.max_sweeps = 0;
    const auto base = centralized_cluster_design(z.channels, z.assignment, z.beams, fixed);
    CentralizedOptions o;
    o.gain_floors = {0.5 * base.cluster_gains[0], 0.5 * base.cluster_gains[1]};
    const auto res = centralized_cluster_design(z.channels, z.assignment, z.beams, o);
    CHECK(res.floors_met);
    CHECK(res.warning.empty());
  }

  SUBCASE("argument errors") {
    const auto z = zero_leak_instance(9, 4, 2);
    BeamformerSet one;
    one.vectors = {z.beams.vectors[0]};
    CHECK_THROWS_AS(centralized_cluster_design(z.channels, z.assignment, one), std::invalid_argument);
    CentralizedOptions o;
    o.gain_floors = {1.0};
    CHECK_THROWS_AS(centralized_cluster_design(z.channels, z.assignment, z.beams, o), std::invalid_argument);
    ChannelSet two = z.channels;
    two.bs_ris.push_back(two.bs_ris[0]);
    two.ris_user.push_back(two.ris_user[0]);
    CHECK_THROWS_AS(centralized_cluster_design(two, z.assignment, z.beams), std::invalid_argument);
  }
}

namespace {

// R RISs, one two-user cluster per RIS; cross paths attenuated by `cross_db`.
ChannelSet separated_clusters(Rng& rng, std::size_t r_count, Eigen::Index m, Eigen::Index nt, double cross_db) {
  const double cross = std::pow(10.0, -cross_db / 20.0);
  ChannelSet ch;
  const std::size_t users = 2 * r_count;
  ch.blocked_direct.assign(users, true);
  ch.direct.assign(users, CVector::Zero(nt));
  ch.ris_user.resize(r_count);
  for (std::size_t r = 0; r < r_count; ++r) {
    ch.bs_ris.push_back(random_matrix(rng, m, nt));
    for (std::size_t k = 0; k < users; ++k)
      ch.ris_user[r].push_back(random_vector(rng, m, k / 2 == r ? 1.0 : cross));
  }
  return ch;
}

}  // namespace

TEST_CASE("distributed_cluster_design") {
  SUBCASE("one RIS, one cluster: same profile as the centralized design") {
    Rng rng(11);
    auto ch = separated_clusters(rng, 1, 6, 2, 0.0);
    BeamformerSet bf;
    bf.vectors = {random_vector(rng, 2)};
    ClusterAssignment a;
    a.clusters = {{0, 1}};
    a.serving_ris = {0};
    const auto d = distributed_cluster_design(ch, a, bf);
    CentralizedOptions o;
    o.coordinate = CoordinateOptions{};
    const auto c = centralized_cluster_design(ch, a, bf, o);
    CHECK((d.profiles[0].coefficients - c.profile.coefficients).norm() < 1e-12);
    CHECK(d.cluster_gains[0] == doctest::Approx(c.cluster_gains[0]).epsilon(1e-12));
    CHECK(d.cross_leakage.cols() == 1);
    CHECK(d.cross_leakage(0, 0) == 0.0);
  }

  SUBCASE("single-user cluster co-phases like align_phases") {
    Rng rng(12);
    ChannelSet ch;
    ch.blocked_direct = {false};
    ch.direct = {random_vector(rng, 1)};
    ch.bs_ris = {random_matrix(rng, 5, 1)};
    ch.ris_user = {{random_vector(rng, 5)}};
    BeamformerSet bf;
    bf.vectors = {CVector::Ones(1)};
    ClusterAssignment a;
    a.clusters = {{0}};
    a.serving_ris = {0};
    const auto d = distributed_cluster_design(ch, a, bf);
    const double bound = coherent_bound(ch.direct[0](0), ch.ris_user[0][0], ch.bs_ris[0].col(0));
    CHECK(d.cluster_gains[0] == doctest::Approx(bound * bound).epsilon(1e-9));
    const auto ref = align_phases(ch.direct[0](0), ch.ris_user[0][0], ch.bs_ris[0].col(0));
    CHECK((d.profiles[0].coefficients - ref.coefficients).norm() < 1e-4);
  }

  SUBCASE("well-separated clusters leak under 1% of the serving power") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(Rng::stream(21, {seed}));
      const auto ch = separated_clusters(rng, 2, 16, 2, 30.0);
      BeamformerSet bf;
      bf.vectors = {random_vector(rng, 2), random_vector(rng, 2)};
      ClusterAssignment a;
      a.clusters = {{0, 1}, {2, 3}};
      a.serving_ris = {0, 1};
      const auto d = distributed_cluster_design(ch, a, bf);
      for (Eigen::Index r = 0; r < 2; ++r) {
        CHECK(d.cross_leakage(r, r) == 0.0);
        CHECK(d.cross_leakage(r, 1 - r) < 0.01 * d.serving_power[static_cast<std::size_t>(r)]);
      }
    }
  }

  SUBCASE("output does not depend on the RIS processing order") {
    Rng rng(13);
    const auto ch = separated_clusters(rng, 3, 6, 2, 10.0);
    BeamformerSet bf;
    bf.vectors = {random_vector(rng, 2), random_vector(rng, 2), random_vector(rng, 2)};
    ClusterAssignment a;
    a.clusters = {{0, 1}, {2, 3}, {4, 5}};
    a.serving_ris = {0, 1, 2};
    const auto d = distributed_cluster_design(ch, a, bf);

    // Relabel the RISs in reverse; the designs must follow the labels.
    ChannelSet rev = ch;
    std::reverse(rev.bs_ris.begin(), rev.bs_ris.end());
    std::reverse(rev.ris_user.begin(), rev.ris_user.end());
    ClusterAssignment ar = a;
    ar.serving_ris = {2, 1, 0};
    const auto dr = distributed_cluster_design(rev, ar, bf);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(d.profiles[r].coefficients == dr.profiles[2 - r].coefficients);
      CHECK(d.serving_power[r] == doctest::Approx(dr.serving_power[2 - r]).epsilon(1e-12));
    }
    for (std::size_t c = 0; c < 3; ++c) CHECK(d.cluster_gains[c] == doctest::Approx(dr.cluster_gains[c]).epsilon(1e-12));
  }

  SUBCASE("each RIS improves its own clusters against the reference") {
    Rng rng(14);
    const auto ch = separated_clusters(rng, 2, 8, 2, 6.0);
    BeamformerSet bf;
    bf.vectors = {random_vector(rng, 2), random_vector(rng, 2)};
    ClusterAssignment a;
    a.clusters = {{0, 1}, {2, 3}};
    a.serving_ris = {0, 1};
    DistributedOptions o;
    o.bits = 2;
    const auto d = distributed_cluster_design(ch, a, bf, o);
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK_NOTHROW(d.profiles[r].validate());
      std::vector<RisProfile> only{RisProfile::unit(8, 2), RisProfile::unit(8, 2)};
      const std::vector<RisProfile> ref = only;
      only[r] = d.profiles[r];
      auto min_gain = [&](const std::vector<RisProfile>& ps) {
        double g = std::numeric_limits<double>::infinity();
        for (std::size_t k : a.clusters[r]) {
          const CVector h = equivalent_channel(ch, k, ps);
          g = std::min(g, std::norm((h.transpose() * bf.vectors[r]).value()));
        }
        return g;
      };
      CHECK(min_gain(only) >= min_gain(ref));
    }
  }

  SUBCASE("argument errors") {
    Rng rng(15);
    const auto ch = separated_clusters(rng, 2, 4, 2, 10.0);
    BeamformerSet bf;
    bf.vectors = {random_vector(rng, 2), random_vector(rng, 2)};
    ClusterAssignment a;
    a.clusters = {{0, 1}, {2, 3}};
    CHECK_THROWS_AS(distributed_cluster_design(ch, a, bf), std::invalid_argument);
    a.serving_ris = {0, 1};
    DistributedOptions o;
    o.reference = {RisProfile::unit(4)};
    CHECK_THROWS_AS(distributed_cluster_design(ch, a, bf, o), std::invalid_argument);
  }
}
