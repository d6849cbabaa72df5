#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spinn {

inline constexpr int kMaxDim = 3;

// Flat storage for a list of points of fixed dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  void push_back(std::span<const double> p);
  void push_back(std::initializer_list<double> p) { push_back(std::span<const double>(p.begin(), p.size())); }
  const std::vector<double>& coords() const { return coords_; }
  std::vector<double>& coords() { return coords_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  int dim_ = 0;
  std::vector<double> coords_;
};

using Point2 = std::array<double, 2>;

// Straight boundary piece from `a` to `b`. In 1-D a segment is a single point
// (a == b). `closed_end` controls whether equispaced sampling includes b.
struct Segment {
  std::string label;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> normal;  // outward unit normal
  bool closed_end = false;
};

// Simple polygon, implicitly closed.
struct Polygon {
  std::vector<Point2> vertices;

  double signed_area() const;
  // Even-odd rule; points on an edge count as outside.
  bool contains(Point2 p) const;
  // Distance from p to the nearest edge.
  double boundary_distance(Point2 p) const;
};

// Reads one "x y" vertex pair per line; blank lines and lines starting with
// '#' are skipped. Throws GeometryError on malformed input or zero area.
Polygon load_polygon(const std::string& path);
Polygon parse_polygon(const std::string& text);

class Geometry {
 public:
  enum class Kind { Interval, Rectangle, SlitSquare, PolygonDomain };

  static Geometry interval(double lo, double hi);
  static Geometry rectangle(double x0, double x1, double y0, double y1);
  // [-1, 1]^2 with the slit [0, 1) x {0} removed.
  static Geometry slit_square();
  static Geometry polygon(Polygon poly);

  Kind kind() const { return kind_; }
  int dim() const { return kind_ == Kind::Interval ? 1 : 2; }
  std::string describe() const;

  // Bounding box, lo/hi per axis.
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  // Lebesgue measure of the domain.
  double measure() const;

  // Strict interior membership; the slit and an eps-tube around it are excluded.
  bool contains(std::span<const double> p) const;
  // Distance to the boundary (including the slit); used by tests.
  double boundary_distance(std::span<const double> p) const;

  // Boundary pieces in a fixed order. Interval: {left, right}. Rectangle:
  // {bottom, right, top, left}. Slit square: the four outer edges then the slit.
  // Polygon: one segment per edge.
  const std::vector<Segment>& segments() const { return segments_; }

  // Equispaced points on one segment. For open-ended segments the parameter
  // runs over j / count, j = 0..count-1; closed-ended ones include the end.
  PointSet sample_segment(std::size_t segment, std::size_t count) const;

  // Lattice of roughly `count` points strictly inside the domain, with its
  // spacing. Rectangles use an nx-by-ny grid of spacing extent/(n+1); other
  // shapes filter a bounding-box lattice sized by area.
  struct Lattice {
    PointSet points;
    double spacing = 0.0;
  };
  Lattice interior_lattice(std::size_t count) const;

  const Polygon& polygon_data() const { return polygon_; }

  static constexpr double kSlitTube = 1e-9;

 private:
  Kind kind_ = Kind::Interval;
  std::vector<double> lo_, hi_;
  std::vector<Segment> segments_;
  Polygon polygon_;
};

}  // namespace spinn
