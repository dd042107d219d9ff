#include "socialego/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace socialego::ref {

M3 rotation_from_axis_angle(const V3& aa) {
  const double theta = std::sqrt(aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]);
  // sin(theta/2)/theta, with its Taylor series near zero.
  const double s = theta < 1e-8 ? 0.5 - theta * theta / 48.0 : std::sin(0.5 * theta) / theta;
  const double w = std::cos(0.5 * theta), x = aa[0] * s, y = aa[1] * s, z = aa[2] * s;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

M3 matmul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[3 * i + j] += a[3 * i + k] * b[3 * k + j];
  return c;
}

M3 transpose(const M3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

std::vector<V3> forward_kinematics(const float* pose, const BodyModel& body) {
  const int J = body.joint_count();
  std::vector<M3> global(J);
  std::vector<V3> x(J);
  for (int j = 0; j < J; ++j) {
    const M3 local = rotation_from_axis_angle({pose[3 * j], pose[3 * j + 1], pose[3 * j + 2]});
    if (j == 0) {
      global[0] = local;
      x[0] = {pose[3 * J], pose[3 * J + 1], pose[3 * J + 2]};
      continue;
    }
    const int p = body.parents[j];
    global[j] = matmul(global[p], local);
    const auto& o = body.rest_offsets[j];
    for (int r = 0; r < 3; ++r)
      x[j][r] = x[p][r] + global[p][3 * r] * o[0] + global[p][3 * r + 1] * o[1] + global[p][3 * r + 2] * o[2];
  }
  return x;
}

JointTrack sequence_joints(const PoseSequence& seq, const BodyModel& body) {
  if (seq.width() != body.pose_width()) throw std::invalid_argument("width mismatch");
  const int T = seq.frame_count(), J = body.joint_count();
  JointTrack track(T, J);
  for (int t = 0; t < T; ++t) {
    const auto x = forward_kinematics(seq.frames.row(t).data(), body);
    for (int j = 0; j < J; ++j)
      for (int c = 0; c < 3; ++c) track.at(t, j)[c] = x[j][c];
  }
  return track;
}

double mpjpe(const JointTrack& pred, const JointTrack& gt) {
  double s = 0.0;
  for (int t = 0; t < pred.frames; ++t)
    for (int j = 0; j < pred.joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) d2 += (pred.at(t, j)[c] - gt.at(t, j)[c]) * (pred.at(t, j)[c] - gt.at(t, j)[c]);
      s += std::sqrt(d2);
    }
  return 1000.0 * s / (static_cast<double>(pred.frames) * pred.joints);
}

double orientation_error(const std::vector<M3>& pred, const std::vector<M3>& gt) {
  double s = 0.0;
  for (size_t t = 0; t < pred.size(); ++t) {
    const M3 d = matmul(pred[t], transpose(gt[t]));
    double f = 0.0;
    for (int i = 0; i < 9; ++i) {
      const double e = d[i] - (i % 4 == 0 ? 1.0 : 0.0);
      f += e * e;
    }
    s += std::sqrt(f);
  }
  return s / static_cast<double>(pred.size());
}

double translation_error(const std::vector<V3>& pred, const std::vector<V3>& gt) {
  double s = 0.0;
  for (size_t t = 0; t < pred.size(); ++t) {
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) d2 += (pred[t][c] - gt[t][c]) * (pred[t][c] - gt[t][c]);
    s += std::sqrt(d2);
  }
  return 1000.0 * s / static_cast<double>(pred.size());
}

double acceleration_error(const JointTrack& pred, const JointTrack& gt, double fps) {
  double s = 0.0;
  for (int t = 1; t + 1 < pred.frames; ++t)
    for (int j = 0; j < pred.joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double ap = (pred.at(t + 1, j)[c] - 2.0 * pred.at(t, j)[c] + pred.at(t - 1, j)[c]) * fps * fps;
        const double ag = (gt.at(t + 1, j)[c] - 2.0 * gt.at(t, j)[c] + gt.at(t - 1, j)[c]) * fps * fps;
        d2 += (ap - ag) * (ap - ag);
      }
      s += std::sqrt(d2);
    }
  return 1000.0 * s / (static_cast<double>(pred.frames - 2) * pred.joints);
}

MetricsReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt, const BodyModel& body) {
  const JointTrack jp = ref::sequence_joints(pred, body), jg = ref::sequence_joints(gt, body);
  const int T = pred.frame_count(), V = pred.width();
  std::vector<M3> rp(T), rg(T);
  std::vector<V3> tp(T), tg(T);
  for (int t = 0; t < T; ++t) {
    const float* a = pred.frames.row(t).data();
    const float* b = gt.frames.row(t).data();
    rp[t] = rotation_from_axis_angle({a[0], a[1], a[2]});
    rg[t] = rotation_from_axis_angle({b[0], b[1], b[2]});
    tp[t] = {a[V - 3], a[V - 2], a[V - 1]};
    tg[t] = {b[V - 3], b[V - 2], b[V - 1]};
  }
  MetricsReport r;
  r.mpjpe = ref::mpjpe(jp, jg);
  r.orientation_error = ref::orientation_error(rp, rg);
  r.translation_error = ref::translation_error(tp, tg);
  r.acceleration_error = T >= 3 ? ref::acceleration_error(jp, jg, pred.fps) : 0.0;
  r.frame_count = T;
  r.joint_count = body.joint_count();
  return r;
}

std::vector<double> attention(const std::vector<double>& q, const std::vector<double>& k,
                              const std::vector<double>& v, int nq, int nk, int d, int heads) {
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> out(static_cast<size_t>(nq) * d, 0.0), w(nk);
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < nq; ++i) {
      double m = -1e300;
      for (int j = 0; j < nk; ++j) {
        double s = 0.0;
        for (int c = 0; c < dh; ++c) s += q[i * d + h * dh + c] * k[j * d + h * dh + c];
        w[j] = s * scale;
        m = std::max(m, w[j]);
      }
      double z = 0.0;
      for (int j = 0; j < nk; ++j) z += (w[j] = std::exp(w[j] - m));
      for (int j = 0; j < nk; ++j)
        for (int c = 0; c < dh; ++c) out[i * d + h * dh + c] += w[j] / z * v[j * d + h * dh + c];
    }
  return out;
}

}  // namespace socialego::ref
