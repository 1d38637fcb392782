#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ddreach/ode_sim.hpp"
#include "ddreach/reachset.hpp"

namespace ddreach::cli::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// Maps data coordinates onto a fixed-size canvas with room for axes.
struct Frame {
  Interval x;
  Interval y;
  double width = 640.0;
  double height = 480.0;
  double margin = 60.0;

  [[nodiscard]] double px(double v) const { return margin + (v - x.lo) / (x.hi - x.lo) * (width - 2 * margin); }
  [[nodiscard]] double py(double v) const {
    return height - margin - (v - y.lo) / (y.hi - y.lo) * (height - 2 * margin);
  }
};

inline void header(std::ostream& os, const Frame& f) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
     << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
     << "\" fill=\"white\"/>\n";
}

inline void axes(std::ostream& os, const Frame& f, const std::string& xname, const std::string& yname) {
  const double x0 = f.px(f.x.lo), x1 = f.px(f.x.hi), y0 = f.py(f.y.lo), y1 = f.py(f.y.hi);
  os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
     << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
  constexpr int ticks = 5;
  for (int i = 0; i < ticks; ++i) {
    const double vx = f.x.lo + (f.x.hi - f.x.lo) * i / (ticks - 1);
    const double vy = f.y.lo + (f.y.hi - f.y.lo) * i / (ticks - 1);
    os << "<line x1=\"" << num(f.px(vx)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(f.px(vx)) << "\" y2=\""
       << num(y0 + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(f.px(vx)) << "\" y=\"" << num(y0 + 18)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << label(vx) << "</text>\n";
    os << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(f.py(vy)) << "\" x2=\"" << num(x0) << "\" y2=\""
       << num(f.py(vy)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(f.py(vy) + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << label(vy) << "</text>\n";
  }
  os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(f.height - 15)
     << "\" font-size=\"13\" text-anchor=\"middle\">" << xname << "</text>\n";
  os << "<text x=\"15\" y=\"" << num((y0 + y1) / 2) << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
     << num((y0 + y1) / 2) << ")\">" << yname << "</text>\n";
}

/// Flat cell index containing (x, y), or nullopt outside the lattice.
[[nodiscard]] inline std::optional<std::size_t> cell_of(const GridField& f, double x, double y) {
  const std::size_t c = f.grid_n - 1;
  auto locate = [&](double v, const Interval& b) -> std::optional<std::size_t> {
    if (v < b.lo || v > b.hi) return std::nullopt;
    const double u = (v - b.lo) / (b.hi - b.lo) * static_cast<double>(c);
    return std::min(c - 1, static_cast<std::size_t>(u));
  };
  const auto i = locate(x, f.bounds[0]);
  const auto j = locate(y, f.bounds[1]);
  if (!i || !j) return std::nullopt;
  return *j * c + *i;
}

/// Lattice cell (i, j) spans grid points i..i+1 along x and j..j+1 along y.
/// A cell is drawn if one of its corners is a member, or if a listed member
/// point falls inside it.
[[nodiscard]] inline std::vector<bool> contour_cells(const GridField& f, const Eigen::MatrixXd* members) {
  const std::size_t n = f.grid_n;
  const std::size_t c = n - 1;
  std::vector<bool> cells(c * c, false);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < c; ++i) {
      cells[j * c + i] = f.member(j * n + i) || f.member(j * n + i + 1) || f.member((j + 1) * n + i) ||
                         f.member((j + 1) * n + i + 1);
    }
  }
  if (members != nullptr) {
    for (Eigen::Index r = 0; r < members->rows(); ++r) {
      const auto idx = cell_of(f, (*members)(r, 0), (*members)(r, 1));
      if (idx) cells[*idx] = true;
    }
  }
  return cells;
}

/// Filled sublevel set of a 2-D field plus optional sample scatter.
inline void write_contour(std::ostream& os, const GridField& f, const Eigen::MatrixXd* samples,
                          const std::string& xname, const std::string& yname) {
  const Frame fr{f.bounds[0], f.bounds[1]};
  header(os, fr);
  const auto cells = contour_cells(f, samples);
  const std::size_t c = f.grid_n - 1;
  os << "<g fill=\"#9ecae1\" stroke=\"none\">\n";
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t i = 0;
    while (i < c) {
      if (!cells[j * c + i]) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      while (i < c && cells[j * c + i]) ++i;
      const double xa = fr.px(f.coordinate(0, start)), xb = fr.px(f.coordinate(0, i));
      const double ya = fr.py(f.coordinate(1, j + 1)), yb = fr.py(f.coordinate(1, j));
      os << "<rect x=\"" << num(xa) << "\" y=\"" << num(ya) << "\" width=\"" << num(xb - xa) << "\" height=\""
         << num(yb - ya) << "\"/>\n";
    }
  }
  os << "</g>\n";
  if (samples != nullptr && samples->rows() > 0) {
    os << "<g fill=\"#08306b\" stroke=\"none\">\n";
    for (Eigen::Index r = 0; r < samples->rows(); ++r) {
      const double x = (*samples)(r, 0), y = (*samples)(r, 1);
      if (x < fr.x.lo || x > fr.x.hi || y < fr.y.lo || y > fr.y.hi) continue;
      os << "<circle cx=\"" << num(fr.px(x)) << "\" cy=\"" << num(fr.py(y)) << "\" r=\"1.5\"/>\n";
    }
    os << "</g>\n";
  }
  axes(os, fr, xname, yname);
  os << "</svg>\n";
}

/// One-dimensional tube over time: shaded band between lo and hi plus a fan
/// of sample trajectories.
inline void write_band(std::ostream& os, const std::vector<double>& times, const std::vector<Interval>& band,
                       const SampleSet* samples, std::size_t max_traj, const std::string& yname) {
  double ylo = band.front().lo, yhi = band.front().hi;
  for (const auto& b : band) {
    ylo = std::min(ylo, b.lo);
    yhi = std::max(yhi, b.hi);
  }
  const double pad = std::max(1e-9, 0.05 * (yhi - ylo));
  const Frame fr{{times.front(), times.back()}, {ylo - pad, yhi + pad}};
  header(os, fr);
  os << "<polygon fill=\"#9ecae1\" stroke=\"#3182bd\" points=\"";
  for (std::size_t t = 0; t < times.size(); ++t) os << num(fr.px(times[t])) << ',' << num(fr.py(band[t].hi)) << ' ';
  for (std::size_t t = times.size(); t-- > 0;) {
    os << num(fr.px(times[t])) << ',' << num(fr.py(band[t].lo)) << (t ? " " : "");
  }
  os << "\"/>\n";
  if (samples != nullptr && samples->has_full() && samples->n_times() == times.size()) {
    const std::size_t k = std::min(max_traj, samples->n_samples);
    os << "<g fill=\"none\" stroke=\"#08306b\" stroke-width=\"0.6\">\n";
    for (std::size_t j = 0; j < k; ++j) {
      os << "<polyline points=\"";
      for (std::size_t t = 0; t < times.size(); ++t) {
        os << num(fr.px(times[t])) << ',' << num(fr.py(samples->at(j, t, 0))) << (t + 1 < times.size() ? " " : "");
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  axes(os, fr, "t", yname);
  os << "</svg>\n";
}

}  // namespace ddreach::cli::svg
