#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "outlab/errors.hpp"

namespace outlab {

using ComplexFn = std::function<Complex(Complex)>;

// Closed curve gamma: [0,1] -> C with gamma(1) = gamma(0), plus the initial
// parameter knots the argument tracker starts from.  Keeping the
// parameterization (rather than a polyline) lets refinement insert points on
// the true curve, so circles stay circles under subdivision.
struct Contour {
  std::function<Complex(double)> gamma;
  std::vector<double> knots;  // strictly increasing, first 0, last 1
};

inline Contour circle_contour(Complex center, double radius, int initial_points = 16) {
  if (!(radius > 0.0)) throw invalid_argument_error("circle_contour: radius must be positive");
  if (initial_points < 4) initial_points = 4;
  Contour c;
  c.gamma = [center, radius](double t) {
    double a = 6.283185307179586476925286766559 * t;
    return center + radius * Complex(std::cos(a), std::sin(a));
  };
  c.knots.resize(static_cast<std::size_t>(initial_points) + 1);
  for (int i = 0; i <= initial_points; ++i)
    c.knots[static_cast<std::size_t>(i)] = static_cast<double>(i) / initial_points;
  return c;
}

// Counterclockwise rectangle boundary with knots at corners and edge midpoints.
inline Contour box_contour(double re_lo, double re_hi, double im_lo, double im_hi) {
  if (!(re_lo < re_hi && im_lo < im_hi))
    throw invalid_argument_error("box_contour: degenerate rectangle");
  Contour c;
  c.gamma = [re_lo, re_hi, im_lo, im_hi](double t) {
    double s = t * 4.0;
    if (s < 1.0) return Complex(re_lo + (re_hi - re_lo) * s, im_lo);
    if (s < 2.0) return Complex(re_hi, im_lo + (im_hi - im_lo) * (s - 1.0));
    if (s < 3.0) return Complex(re_hi - (re_hi - re_lo) * (s - 2.0), im_hi);
    return Complex(re_lo, im_hi - (im_hi - im_lo) * (s - 3.0));
  };
  c.knots = {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
  return c;
}

// Counterclockwise boundary of the polar box r in [r0, r1], angle in
// [th0, th1]: outer arc, inward radial edge, inner arc backwards, outward
// radial edge.  Tiles an annulus without ever dipping inside r0.
inline Contour sector_contour(double r0, double r1, double th0, double th1) {
  if (!(0.0 < r0 && r0 < r1 && th0 < th1))
    throw invalid_argument_error("sector_contour: degenerate sector");
  Contour c;
  c.gamma = [r0, r1, th0, th1](double t) {
    double s = t * 4.0;
    if (s < 1.0) {
      double a = th0 + (th1 - th0) * s;
      return r1 * Complex(std::cos(a), std::sin(a));
    }
    if (s < 2.0) {
      double r = r1 - (r1 - r0) * (s - 1.0);
      return r * Complex(std::cos(th1), std::sin(th1));
    }
    if (s < 3.0) {
      double a = th1 - (th1 - th0) * (s - 2.0);
      return r0 * Complex(std::cos(a), std::sin(a));
    }
    double r = r0 + (r1 - r0) * (s - 3.0);
    return r * Complex(std::cos(th0), std::sin(th0));
  };
  c.knots = {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
  return c;
}

struct WindingOptions {
  double min_modulus = 1e-12;  // |fn| below this anywhere on the contour aborts
  int max_refine = 28;         // bisection depth cap per initial knot interval
  int min_refine = 2;          // every initial knot interval is split this deep first
  std::size_t max_evaluations = 200000;
};

// Winding number of fn around the contour by discrete argument continuation.
// A step is accepted only once the segment is past the forced minimum depth,
// its wrapped phase step is under pi/2, and the endpoint values are close in
// the plane relative to their moduli.  The chord condition matters: a segment
// passing near a cluster of zeros can sweep a whole extra turn while its
// wrapped endpoint phase looks small, but any such swirl drives |fn| through
// a dip that the chord test resolves before the step can be accepted.
inline int winding_number(const ComplexFn& fn, const Contour& contour,
                          const WindingOptions& opt = {}) {
  if (contour.knots.size() < 2)
    throw invalid_argument_error("winding_number: contour needs at least one segment");

  struct Node {
    double t;
    Complex value;
    int depth;
  };

  auto eval = [&](double t, std::size_t& budget) {
    if (budget == 0) throw contour_error("winding_number: evaluation budget exhausted");
    --budget;
    Complex v = fn(contour.gamma(t));
    if (!(std::abs(v) >= opt.min_modulus))
      throw contour_error("winding_number: function modulus fell below the contour threshold");
    return v;
  };

  std::size_t budget = opt.max_evaluations;
  std::vector<Node> pending;  // stack, processed from the back toward t = 0
  for (std::size_t i = contour.knots.size(); i-- > 0;)
    pending.push_back({contour.knots[i], eval(contour.knots[i], budget), 0});

  double total = 0.0;
  Node prev = pending.back();
  pending.pop_back();
  while (!pending.empty()) {
    Node next = pending.back();
    double step = std::arg(next.value / prev.value);
    double chord = std::abs(next.value - prev.value);
    double base = std::min(std::abs(prev.value), std::abs(next.value));
    bool settled = std::max(prev.depth, next.depth) >= opt.min_refine &&
                   std::abs(step) < 1.5707963267948966 && chord < 0.9 * base;
    if (settled) {
      total += step;
      prev = next;
      pending.pop_back();
      continue;
    }
    int depth = std::max(prev.depth, next.depth) + 1;
    if (depth > opt.max_refine)
      throw contour_error("winding_number: phase step would not settle under refinement");
    double mid = 0.5 * (prev.t + next.t);
    pending.push_back({mid, eval(mid, budget), depth});
  }

  double turns = total / 6.283185307179586476925286766559;
  long nearest = std::lround(turns);
  if (std::abs(turns - static_cast<double>(nearest)) > 0.25)
    throw contour_error("winding_number: accumulated argument is not a whole number of turns");
  return static_cast<int>(nearest);
}

// A certified zero: where it is, how many times f vanishes there, and how the
// polish went.
struct LocatedZero {
  Complex position;
  int multiplicity = 1;
  double residual = 0.0;
  int newton_iterations = 0;
  bool polished = true;
};

struct ZeroSearchOptions {
  double tol = 1e-9;      // target residual for Newton polishing
  double min_box = 1e-2;  // subdivide winding-positive regions below this diameter
  int max_dilate = 8;     // boundary-through-zero retries per region
  int max_newton = 80;
  WindingOptions winding{};
};

namespace detail {

// Newton from z0 with a central finite-difference derivative.  Returns false
// if the iteration left the trust radius or the derivative degenerated.
inline bool newton_polish(const ComplexFn& fn, Complex z0, double trust_radius,
                          const ZeroSearchOptions& opt, Complex& out, double& residual,
                          int& iters) {
  Complex z = z0;
  for (iters = 0; iters < opt.max_newton; ++iters) {
    Complex fz = fn(z);
    residual = std::abs(fz);
    out = z;
    if (residual < opt.tol) return true;
    double h = 1e-6 * (1.0 + std::abs(z));
    Complex d = (fn(z + h) - fn(z - h)) / (2.0 * h);
    if (!(std::abs(d) > 0.0)) return false;
    Complex step = fz / d;
    if (!(std::abs(step) < 1e6)) return false;
    z -= step;
    if (std::abs(z - z0) > trust_radius) return false;
  }
  return false;
}

// For an m-fold zero plain Newton slows to linear and stalls at position
// error ~ (residual/|f^(m)|)^(1/m); the corrected step m f/f' restores
// quadratic convergence.  Keeps the refined point only if it does not make
// the residual worse.
inline void sharpen_multiple_zero(const ComplexFn& fn, int m, Complex& z, double& residual) {
  Complex best = z;
  double best_res = residual;
  Complex cur = z;
  for (int it = 0; it < 30; ++it) {
    Complex fz = fn(cur);
    double res = std::abs(fz);
    if (res < best_res) {
      best = cur;
      best_res = res;
    }
    double h = 1e-6 * (1.0 + std::abs(cur));
    Complex d = (fn(cur + h) - fn(cur - h)) / (2.0 * h);
    if (!(std::abs(d) > 0.0)) break;
    Complex step = static_cast<double>(m) * fz / d;
    cur -= step;
    if (std::abs(step) < 1e-11 * (1.0 + std::abs(cur))) {
      double res2 = std::abs(fn(cur));
      if (res2 < best_res) {
        best = cur;
        best_res = res2;
      }
      break;
    }
    if (std::abs(cur - z) > 1.0) break;
  }
  z = best;
  residual = best_res;
}

// Winding of a tiny circle around a polished zero gives its order.
inline int zero_multiplicity(const ComplexFn& fn, Complex z, const WindingOptions& base) {
  WindingOptions opt = base;
  opt.min_modulus = 1e-300;  // |f| on the tiny circle is legitimately small
  for (int attempt = 0; attempt < 4; ++attempt) {
    double radius = 1e-4 * (1.0 + std::abs(z)) * std::pow(3.0, attempt);
    try {
      int w = winding_number(fn, circle_contour(z, radius, 16), opt);
      if (w >= 1) return w;
    } catch (const contour_error&) {
      // circle grazed a neighboring feature; widen and retry
    }
  }
  return 1;
}

struct Sector {
  double r0, r1, th0, th1;
  int dilations = 0;

  double diameter() const {
    double radial = r1 - r0;
    double arc = r1 * (th1 - th0);
    return std::max(radial, arc);
  }
};

}  // namespace detail

// All zeros of fn in the closed annulus r_min <= |z| <= r_max, located by
// winding counts over polar sectors, bisected until small, then polished by
// Newton.  fn must be analytic on a slightly padded annulus: sectors whose
// boundary grazes a zero are dilated up to max_dilate times, moving the inner
// edge at most down to analytic_floor.
inline std::vector<LocatedZero> locate_zeros_annulus(const ComplexFn& fn, double r_min,
                                                     double r_max,
                                                     const ZeroSearchOptions& opt = {},
                                                     double analytic_floor = 0.0) {
  if (!(0.0 < r_min && r_min < r_max))
    throw region_error("locate_zeros_annulus: need 0 < r_min < r_max");
  if (analytic_floor <= 0.0 || analytic_floor >= r_min)
    analytic_floor = std::max(0.75 * r_min, r_min - 0.25 * (r_max - r_min));

  const double pi = 3.14159265358979323846;
  std::vector<detail::Sector> work;
  // eight initial sectors; radial extent split once when the annulus is thick
  int radial_splits = (r_max - r_min > 2.0 * r_min) ? 2 : 1;
  for (int s = 0; s < radial_splits; ++s) {
    double a = r_min + (r_max - r_min) * s / radial_splits;
    double b = r_min + (r_max - r_min) * (s + 1) / radial_splits;
    for (int q = 0; q < 8; ++q)
      work.push_back({a, b, 2.0 * pi * q / 8.0, 2.0 * pi * (q + 1) / 8.0, 0});
  }

  std::vector<LocatedZero> found;
  while (!work.empty()) {
    detail::Sector sec = work.back();
    work.pop_back();

    int w;
    try {
      w = winding_number(fn, sector_contour(sec.r0, sec.r1, sec.th0, sec.th1), opt.winding);
    } catch (const contour_error&) {
      if (sec.dilations >= opt.max_dilate)
        throw contour_error("locate_zeros_annulus: sector boundary would not clear the zero set");
      // grow the sector 10% in every direction, clamped to the analytic pad
      double dr = 0.05 * (sec.r1 - sec.r0), dth = 0.05 * (sec.th1 - sec.th0);
      sec.r0 = std::max(analytic_floor, sec.r0 - dr);
      sec.r1 += dr;
      sec.th0 -= dth;
      sec.th1 += dth;
      sec.dilations++;
      work.push_back(sec);
      continue;
    }
    if (w <= 0) continue;

    if (sec.diameter() > opt.min_box) {
      // split along the longer side
      if (sec.r1 - sec.r0 >= sec.r1 * (sec.th1 - sec.th0)) {
        double mid = 0.5 * (sec.r0 + sec.r1);
        work.push_back({sec.r0, mid, sec.th0, sec.th1, sec.dilations});
        work.push_back({mid, sec.r1, sec.th0, sec.th1, sec.dilations});
      } else {
        double mid = 0.5 * (sec.th0 + sec.th1);
        work.push_back({sec.r0, sec.r1, sec.th0, mid, sec.dilations});
        work.push_back({sec.r0, sec.r1, mid, sec.th1, sec.dilations});
      }
      continue;
    }

    double mid_r = 0.5 * (sec.r0 + sec.r1), mid_th = 0.5 * (sec.th0 + sec.th1);
    Complex center = mid_r * Complex(std::cos(mid_th), std::sin(mid_th));
    LocatedZero z;
    z.polished = detail::newton_polish(fn, center, 10.0 * sec.diameter() + 1e-3, opt, z.position,
                                       z.residual, z.newton_iterations);
    if (z.polished) {
      z.multiplicity = detail::zero_multiplicity(fn, z.position, opt.winding);
      if (z.multiplicity > 1)
        detail::sharpen_multiple_zero(fn, z.multiplicity, z.position, z.residual);
    } else {
      z.position = center;
      z.residual = std::abs(fn(center));
      z.multiplicity = w;
    }
    found.push_back(z);
  }

  // Dilated sectors may polish onto zeros in the analytic pad outside the
  // requested annulus; those belong to no caller and are dropped.
  std::erase_if(found, [&](const LocatedZero& z) {
    double a = std::abs(z.position);
    return a < r_min * (1.0 - 1e-12) || a > r_max * (1.0 + 1e-12);
  });

  // Distinct sectors can polish onto the same zero once dilation makes them
  // overlap; collapse anything within the multiplicity-circle scale.
  std::vector<LocatedZero> unique;
  for (const LocatedZero& z : found) {
    bool dup = false;
    for (LocatedZero& u : unique)
      if (std::abs(u.position - z.position) < 2e-4 * (1.0 + std::abs(z.position))) {
        if (z.residual < u.residual) u = z;
        dup = true;
        break;
      }
    if (!dup) unique.push_back(z);
  }
  std::sort(unique.begin(), unique.end(), [](const LocatedZero& a, const LocatedZero& b) {
    if (a.position.real() != b.position.real()) return a.position.real() < b.position.real();
    return a.position.imag() < b.position.imag();
  });
  return unique;
}

// Box-region variant of the search, with quadtree subdivision.
inline std::vector<LocatedZero> locate_zeros_box(const ComplexFn& fn, double re_lo, double re_hi,
                                                 double im_lo, double im_hi,
                                                 const ZeroSearchOptions& opt = {}) {
  if (!(re_lo < re_hi && im_lo < im_hi))
    throw region_error("locate_zeros_box: degenerate rectangle");

  struct Box {
    double re_lo, re_hi, im_lo, im_hi;
    int dilations = 0;
    double diameter() const { return std::max(re_hi - re_lo, im_hi - im_lo); }
  };
  std::vector<Box> work{{re_lo, re_hi, im_lo, im_hi, 0}};
  std::vector<LocatedZero> found;

  while (!work.empty()) {
    Box box = work.back();
    work.pop_back();
    int w;
    try {
      w = winding_number(fn, box_contour(box.re_lo, box.re_hi, box.im_lo, box.im_hi),
                         opt.winding);
    } catch (const contour_error&) {
      if (box.dilations >= opt.max_dilate)
        throw contour_error("locate_zeros_box: box boundary would not clear the zero set");
      double dr = 0.05 * (box.re_hi - box.re_lo), di = 0.05 * (box.im_hi - box.im_lo);
      work.push_back({box.re_lo - dr, box.re_hi + dr, box.im_lo - di, box.im_hi + di,
                      box.dilations + 1});
      continue;
    }
    if (w <= 0) continue;
    if (box.diameter() > opt.min_box) {
      double rm = 0.5 * (box.re_lo + box.re_hi), im = 0.5 * (box.im_lo + box.im_hi);
      work.push_back({box.re_lo, rm, box.im_lo, im, box.dilations});
      work.push_back({rm, box.re_hi, box.im_lo, im, box.dilations});
      work.push_back({box.re_lo, rm, im, box.im_hi, box.dilations});
      work.push_back({rm, box.re_hi, im, box.im_hi, box.dilations});
      continue;
    }
    Complex center(0.5 * (box.re_lo + box.re_hi), 0.5 * (box.im_lo + box.im_hi));
    LocatedZero z;
    z.polished = detail::newton_polish(fn, center, 10.0 * box.diameter() + 1e-3, opt, z.position,
                                       z.residual, z.newton_iterations);
    if (z.polished) {
      z.multiplicity = detail::zero_multiplicity(fn, z.position, opt.winding);
      if (z.multiplicity > 1)
        detail::sharpen_multiple_zero(fn, z.multiplicity, z.position, z.residual);
    } else {
      z.position = center;
      z.residual = std::abs(fn(center));
      z.multiplicity = w;
    }
    found.push_back(z);
  }

  double slack = 1e-12 * (1.0 + std::max(std::max(std::abs(re_lo), std::abs(re_hi)),
                                         std::max(std::abs(im_lo), std::abs(im_hi))));
  std::erase_if(found, [&](const LocatedZero& z) {
    return z.position.real() < re_lo - slack || z.position.real() > re_hi + slack ||
           z.position.imag() < im_lo - slack || z.position.imag() > im_hi + slack;
  });

  std::vector<LocatedZero> unique;
  for (const LocatedZero& z : found) {
    bool dup = false;
    for (LocatedZero& u : unique)
      if (std::abs(u.position - z.position) < 2e-4 * (1.0 + std::abs(z.position))) {
        if (z.residual < u.residual) u = z;
        dup = true;
        break;
      }
    if (!dup) unique.push_back(z);
  }
  std::sort(unique.begin(), unique.end(), [](const LocatedZero& a, const LocatedZero& b) {
    if (a.position.real() != b.position.real()) return a.position.real() < b.position.real();
    return a.position.imag() < b.position.imag();
  });
  return unique;
}

}
