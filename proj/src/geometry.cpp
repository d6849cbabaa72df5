#include "spinn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spinn/errors.hpp"

namespace spinn {

void PointSet::push_back(std::span<const double> p) {
  if (static_cast<int>(p.size()) != dim_) {
    throw UsageError("PointSet: expected " + std::to_string(dim_) + " coordinates, got " + std::to_string(p.size()));
  }
  coords_.insert(coords_.end(), p.begin(), p.end());
}

namespace {

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = p[0] - (a[0] + t * dx), ey = p[1] - (a[1] + t * dy);
  return std::hypot(ex, ey);
}

Segment edge(std::string label, Point2 a, Point2 b, Point2 normal, bool closed_end = false) {
  return Segment{std::move(label), {a[0], a[1]}, {b[0], b[1]}, {normal[0], normal[1]}, closed_end};
}

}  // namespace

double Polygon::signed_area() const {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = vertices[i];
    const Point2& q = vertices[(i + 1) % n];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * twice;
}

double Polygon::boundary_distance(Point2 p) const {
  double best = INFINITY;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) best = std::min(best, segment_distance(p, vertices[i], vertices[(i + 1) % n]));
  return best;
}

bool Polygon::contains(Point2 p) const {
  if (boundary_distance(p) < 1e-12) return false;
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[j];
    if ((a[1] > p[1]) != (b[1] > p[1])) {
      const double x_cross = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
      if (p[0] < x_cross) inside = !inside;
    }
  }
  return inside;
}

Polygon parse_polygon(const std::string& text) {
  Polygon poly;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double x, y;
    if (!(fields >> x >> y)) {
      throw GeometryError("polygon: line " + std::to_string(line_no) + ": expected \"x y\", got \"" + line + "\"");
    }
    poly.vertices.push_back({x, y});
  }
  if (poly.vertices.size() < 3) throw GeometryError("polygon: need at least 3 vertices");
  if (std::abs(poly.signed_area()) < 1e-14) throw GeometryError("polygon: zero signed area");
  return poly;
}

Polygon load_polygon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GeometryError("polygon: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_polygon(buf.str());
}

Geometry Geometry::interval(double lo, double hi) {
  if (!(hi > lo)) throw GeometryError("interval: empty domain");
  Geometry g;
  g.kind_ = Kind::Interval;
  g.lo_ = {lo};
  g.hi_ = {hi};
  g.segments_ = {Segment{"left", {lo}, {lo}, {-1.0}, true}, Segment{"right", {hi}, {hi}, {1.0}, true}};
  return g;
}

Geometry Geometry::rectangle(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0 && y1 > y0)) throw GeometryError("rectangle: empty domain");
  Geometry g;
  g.kind_ = Kind::Rectangle;
  g.lo_ = {x0, y0};
  g.hi_ = {x1, y1};
  g.segments_ = {edge("bottom", {x0, y0}, {x1, y0}, {0, -1}), edge("right", {x1, y0}, {x1, y1}, {1, 0}),
                 edge("top", {x1, y1}, {x0, y1}, {0, 1}), edge("left", {x0, y1}, {x0, y0}, {-1, 0})};
  return g;
}

Geometry Geometry::slit_square() {
  Geometry g = rectangle(-1.0, 1.0, -1.0, 1.0);
  g.kind_ = Kind::SlitSquare;
  // Both faces of the slit coincide, so it is a single Dirichlet segment. Its
  // normal is only nominal.
  g.segments_.push_back(edge("slit", {0.0, 0.0}, {1.0, 0.0}, {0, 1}));
  return g;
}

Geometry Geometry::polygon(Polygon poly) {
  if (poly.vertices.size() < 3 || std::abs(poly.signed_area()) < 1e-14) {
    throw GeometryError("polygon: degenerate polygon");
  }
  Geometry g;
  g.kind_ = Kind::PolygonDomain;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& v : poly.vertices) {
    x0 = std::min(x0, v[0]);
    x1 = std::max(x1, v[0]);
    y0 = std::min(y0, v[1]);
    y1 = std::max(y1, v[1]);
  }
  g.lo_ = {x0, y0};
  g.hi_ = {x1, y1};
  const double orientation = poly.signed_area() > 0.0 ? 1.0 : -1.0;
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly.vertices[i];
    const Point2 b = poly.vertices[(i + 1) % n];
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len = std::hypot(dx, dy);
    // Counter-clockwise polygons have the interior on the left of each edge.
    const Point2 normal{orientation * dy / len, -orientation * dx / len};
    g.segments_.push_back(edge("edge" + std::to_string(i), a, b, normal));
  }
  g.polygon_ = std::move(poly);
  return g;
}

std::string Geometry::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::Interval: out << "interval [" << lo_[0] << ", " << hi_[0] << "]"; break;
    case Kind::Rectangle:
      out << "rectangle [" << lo_[0] << ", " << hi_[0] << "] x [" << lo_[1] << ", " << hi_[1] << "]";
      break;
    case Kind::SlitSquare: out << "square [-1, 1]^2 with slit [0, 1) x {0}"; break;
    case Kind::PolygonDomain: out << "polygon with " << polygon_.vertices.size() << " vertices"; break;
  }
  return out.str();
}

double Geometry::measure() const {
  switch (kind_) {
    case Kind::Interval: return hi_[0] - lo_[0];
    case Kind::Rectangle:
    case Kind::SlitSquare: return (hi_[0] - lo_[0]) * (hi_[1] - lo_[1]);
    case Kind::PolygonDomain: return std::abs(polygon_.signed_area());
  }
  return 0.0;
}

bool Geometry::contains(std::span<const double> p) const {
  switch (kind_) {
    case Kind::Interval: return p[0] > lo_[0] && p[0] < hi_[0];
    case Kind::Rectangle: return p[0] > lo_[0] && p[0] < hi_[0] && p[1] > lo_[1] && p[1] < hi_[1];
    case Kind::SlitSquare: {
      const bool in_square = std::abs(p[0]) < 1.0 && std::abs(p[1]) < 1.0;
      const bool on_slit = std::abs(p[1]) <= kSlitTube && p[0] >= -kSlitTube;
      return in_square && !on_slit;
    }
    case Kind::PolygonDomain: return polygon_.contains({p[0], p[1]});
  }
  return false;
}

double Geometry::boundary_distance(std::span<const double> p) const {
  switch (kind_) {
    case Kind::Interval: return std::min(std::abs(p[0] - lo_[0]), std::abs(hi_[0] - p[0]));
    case Kind::Rectangle:
    case Kind::SlitSquare: {
      double d = std::min({std::abs(p[0] - lo_[0]), std::abs(hi_[0] - p[0]), std::abs(p[1] - lo_[1]),
                           std::abs(hi_[1] - p[1])});
      if (kind_ == Kind::SlitSquare) d = std::min(d, segment_distance({p[0], p[1]}, {0.0, 0.0}, {1.0, 0.0}));
      return d;
    }
    case Kind::PolygonDomain: return polygon_.boundary_distance({p[0], p[1]});
  }
  return 0.0;
}

PointSet Geometry::sample_segment(std::size_t segment, std::size_t count) const {
  const Segment& s = segments_.at(segment);
  PointSet out(dim());
  if (dim() == 1) {
    out.push_back(s.a);
    return out;
  }
  if (count == 0) throw ConfigError("sample_segment: count must be >= 1");
  const std::size_t steps = s.closed_end && count > 1 ? count - 1 : count;
  for (std::size_t j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(steps);
    const double p[2] = {s.a[0] + t * (s.b[0] - s.a[0]), s.a[1] + t * (s.b[1] - s.a[1])};
    out.push_back(p);
  }
  return out;
}

Geometry::Lattice Geometry::interior_lattice(std::size_t count) const {
  if (count == 0) throw ConfigError("interior_lattice: count must be >= 1");
  Lattice lat{PointSet(dim()), 0.0};
  const double n = static_cast<double>(count);
  if (kind_ == Kind::Interval) {
    const double h = (hi_[0] - lo_[0]) / (n + 1.0);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = lo_[0] + static_cast<double>(i + 1) * h;
      lat.points.push_back({x});
    }
    lat.spacing = h;
    return lat;
  }
  const double width = hi_[0] - lo_[0], height = hi_[1] - lo_[1];
  // Inflate the target for shapes that only fill part of their bounding box.
  const double fill = measure() / (width * height);
  const double target = n / fill;
  const auto nx = static_cast<std::size_t>(std::max(1.0, std::round(std::sqrt(target * width / height))));
  const auto ny = static_cast<std::size_t>(std::max(1.0, std::round(target / static_cast<double>(nx))));
  const double dx = width / static_cast<double>(nx + 1), dy = height / static_cast<double>(ny + 1);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double p[2] = {lo_[0] + static_cast<double>(i + 1) * dx, lo_[1] + static_cast<double>(j + 1) * dy};
      if (contains(p)) lat.points.push_back(p);
    }
  }
  lat.spacing = std::sqrt(dx * dy);
  return lat;
}

}  // namespace spinn
