#pragma once

#include "cvhi/problem.hpp"

namespace testutil {

using cvhi::Mat;
using cvhi::Vec;

inline Vec v1(double a) { return Vec::Constant(1, a); }
inline Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}
inline Mat m1(double a) { return Mat::Constant(1, 1, a); }

inline cvhi::ConvexSet interval(double lo, double hi) { return cvhi::ConvexSet::box(v1(lo), v1(hi)); }

inline cvhi::MaxSmoothBifunction max_affine_1d(std::vector<std::pair<double, double>> slope_offset,
                                               std::vector<double> param_slopes = {}) {
  std::vector<cvhi::SmoothPiece> pcs;
  for (size_t i = 0; i < slope_offset.size(); ++i) {
    cvhi::SmoothPiece s;
    s.g_x = v1(slope_offset[i].first);
    s.b = slope_offset[i].second;
    s.g_p = v1(i < param_slopes.size() ? param_slopes[i] : 0.0);
    pcs.push_back(s);
  }
  return cvhi::MaxSmoothBifunction(1, 1, pcs);
}

// 1-D problem: A = pa u + ka w, B = pb w + kb u, boxes, no nonsmooth terms.
inline cvhi::CoupledProblem problem_1d(double pa, double ka, double pb, double kb, double h, double l,
                                       cvhi::ConvexSet C, cvhi::ConvexSet D) {
  cvhi::CoupledProblem p;
  p.layout = {};
  p.A = cvhi::CoupledOperator::affine(m1(pa), m1(ka), Vec::Zero(1));
  p.B = cvhi::CoupledOperator::affine(m1(pb), m1(kb), Vec::Zero(1));
  p.J = cvhi::MaxSmoothBifunction::zero(1, 1);
  p.H = cvhi::MaxSmoothBifunction::zero(1, 1);
  p.psi = cvhi::ConvexExtendedFunction::zero(1);
  p.theta = cvhi::ConvexExtendedFunction::zero(1);
  p.C = std::move(C);
  p.D = std::move(D);
  p.gamma1 = cvhi::LinearMap::identity(1);
  p.gamma2 = cvhi::LinearMap::identity(1);
  p.delta1 = cvhi::LinearMap::identity(1);
  p.delta2 = cvhi::LinearMap::identity(1);
  p.h = v1(h);
  p.l = v1(l);
  p.validate();
  return p;
}

inline cvhi::CoupledProblem coupled_box_1d(double h = 1.0, double l = 0.0) {
  return problem_1d(1.0, 0.5, 1.0, 0.5, h, l, interval(-1, 1), interval(-1, 1));
}

}  // namespace testutil
