#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "socialego/body_model.hpp"
#include "socialego/errors.hpp"
#include "socialego/reference.hpp"

using namespace socialego;

namespace {

PoseVector random_pose(Rng& rng, const BodyModel& body) {
  PoseVector p(body.pose_width());
  for (int i = 0; i < p.size(); ++i) p[i] = 0.4 * rng.normal();
  return p;
}

}  // namespace

TEST_SUITE("body") {
  TEST_CASE("default skeleton layout") {
    const auto body = BodyModel::humanoid();
    CHECK(body.joint_count() == 24);
    CHECK(body.pose_width() == 75);
    CHECK_NOTHROW(body.validate());
    CHECK(body.parents[0] < 0);
    for (int j = 1; j < 24; ++j) CHECK(body.parents[j] < j);
    CHECK(body.rest_offsets[0].norm() == 0.0);
    CHECK(body.standing_root_height() > 0.5);
  }

  TEST_CASE("zero pose places joints at cumulative rest offsets") {
    const auto body = BodyModel::humanoid();
    PoseVector p = PoseVector::Zero(75);
    p.tail<3>() = Vec3(0.5, 1.0, -2.0);
    const Joints x = forward_kinematics(p, body);
    for (int j = 0; j < 24; ++j) {
      Vec3 want = p.tail<3>();
      for (int k = j; k > 0; k = body.parents[k]) want += body.rest_offsets[k];
      CHECK((x.row(j).transpose() - want).norm() < 1e-12);
    }
  }

  TEST_CASE("two-joint chain rotated a quarter turn") {
    BodyModel chain{{-1, 0}, {Vec3::Zero(), Vec3(1, 0, 0)}};
    PoseVector p = PoseVector::Zero(pose_width_for(2));
    p.segment<3>(0) = Vec3(0, 0, std::numbers::pi / 2);
    const Joints x = forward_kinematics(p, chain);
    CHECK((x.row(1).transpose() - Vec3(0, 1, 0)).norm() < 1e-12);
  }

  TEST_CASE("translation equivariance is exact") {
    const auto body = BodyModel::humanoid();
    Rng rng(4);
    for (int n = 0; n < 20; ++n) {
      PoseVector p = random_pose(rng, body);
      p.tail<3>().setZero();
      const Vec3 t(rng.normal(), rng.normal(), rng.normal());
      PoseVector q = p;
      q.tail<3>() = t;
      const Joints a = forward_kinematics(p, body), b = forward_kinematics(q, body);
      for (int j = 0; j < 24; ++j) CHECK((b.row(j) - a.row(j) - t.transpose()).norm() == doctest::Approx(0.0));
    }
  }

  TEST_CASE("pre-composing the global orientation rotates joints about the root") {
    const auto body = BodyModel::humanoid();
    Rng rng(5);
    for (int n = 0; n < 20; ++n) {
      const PoseVector p = random_pose(rng, body);
      const Mat3 Q = axis_angle_to_matrix(testutil::random_axis_angle(rng, 3.0));
      PoseVector q = p;
      q.head<3>() = matrix_to_axis_angle(Q * axis_angle_to_matrix(p.head<3>()));
      const Joints a = forward_kinematics(p, body), b = forward_kinematics(q, body);
      const Vec3 root = p.tail<3>();
      for (int j = 0; j < 24; ++j) {
        const Vec3 want = root + Q * (a.row(j).transpose() - root);
        CHECK((b.row(j).transpose() - want).norm() < 1e-6);
      }
    }
  }

  TEST_CASE("forward kinematics agrees with the serial quaternion oracle") {
    const auto body = BodyModel::humanoid();
    const auto seq = testutil::random_sequence(40, 6, 0.5);
    const JointTrack fast = sequence_joints(seq, body), slow = ref::sequence_joints(seq, body);
    REQUIRE(fast.xyz.size() == slow.xyz.size());
    for (size_t i = 0; i < fast.xyz.size(); ++i) CHECK(std::abs(fast.xyz[i] - slow.xyz[i]) < 1e-12);
  }

  TEST_CASE("vector-jacobian product matches central differences") {
    const auto body = BodyModel::humanoid();
    Rng rng(7);
    const PoseVector p = random_pose(rng, body);
    Joints g(24, 3);
    for (int i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const PoseVector grad = forward_kinematics_vjp(p, body, g);
    const double h = 1e-6;
    for (int i = 0; i < p.size(); ++i) {
      PoseVector a = p, b = p;
      a[i] += h;
      b[i] -= h;
      const double fd = ((forward_kinematics(a, body) - forward_kinematics(b, body)).cwiseProduct(g)).sum() / (2 * h);
      CHECK(std::abs(fd - grad[i]) < 1e-7 * std::max(1.0, std::abs(fd)));
    }
  }

  TEST_CASE("invalid skeletons and sequences are rejected") {
    BodyModel two_roots{{-1, -1}, {Vec3::Zero(), Vec3(1, 0, 0)}};
    CHECK_THROWS_AS(two_roots.validate(), InvalidArgument);
    BodyModel forward_parent{{-1, 2, 0}, {Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0)}};
    CHECK_THROWS_AS(forward_parent.validate(), InvalidArgument);
    BodyModel offset_root{{-1, 0}, {Vec3(0.1, 0, 0), Vec3(1, 0, 0)}};
    CHECK_THROWS_AS(offset_root.validate(), InvalidArgument);

    auto seq = testutil::random_sequence(3, 8);
    CHECK_NOTHROW(seq.validate());
    seq.frames(1, 4) = NAN;
    CHECK_THROWS_AS(seq.validate(), InvalidArgument);
    CHECK_THROWS_AS(sequence_joints(seq, BodyModel::humanoid()), InvalidArgument);
    auto bad_fps = testutil::random_sequence(3, 8);
    bad_fps.fps = 0.0;
    CHECK_THROWS_AS(bad_fps.validate(), InvalidArgument);
    PoseSequence empty;
    empty.frames.resize(0, 75);
    CHECK_THROWS_AS(empty.validate(), InvalidArgument);
    CHECK_THROWS_AS(forward_kinematics(PoseVector::Zero(74), BodyModel::humanoid()), InvalidArgument);
  }

  TEST_CASE("root channels") {
    const auto seq = testutil::random_sequence(5, 9);
    const auto traj = root_trajectory(seq);
    const auto rots = root_rotations(seq);
    REQUIRE(traj.size() == 5);
    for (int t = 0; t < 5; ++t) {
      CHECK(traj[t].x() == double(seq.frames(t, 72)));
      CHECK(is_rotation(rots[t]));
    }
  }
}
