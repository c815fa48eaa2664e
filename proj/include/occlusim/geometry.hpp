#ifndef OCCLUSIM_GEOMETRY_HPP
#define OCCLUSIM_GEOMETRY_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace occlusim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Wrap an angle into (-pi, pi].
inline double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

using Polyline = std::vector<Vec2>;

/// Distance from a point to the segment [a, b].
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 <= 0.0) return distance(p, a);
    double t = (p - a).dot(ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

/// Distance from a point to a polyline, interpolating linearly between vertices.
inline double point_polyline_distance(const Vec2& p, const Polyline& path) {
    if (path.empty()) throw std::invalid_argument("empty polyline");
    if (path.size() == 1) return distance(p, path[0]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        best = std::min(best, point_segment_distance(p, path[i], path[i + 1]));
    }
    return best;
}

/// Proper/improper intersection test for segments [p1,p2] and [q1,q2].
/// Endpoint touches within eps are not counted (endpoints exclusive).
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                               const Vec2& q2, double eps = 1e-9) {
    const Vec2 r = p2 - p1;
    const Vec2 s = q2 - q1;
    const double rxs = r.cross(s);
    const Vec2 qp = q1 - p1;
    if (std::abs(rxs) < eps * eps) {
        // parallel; treat collinear overlap as intersecting only if interiors overlap
        if (std::abs(qp.cross(r)) > eps * std::max(1.0, r.norm())) return false;
        const double rr = r.dot(r);
        if (rr < eps * eps) return false;
        double t0 = qp.dot(r) / rr;
        double t1 = t0 + s.dot(r) / rr;
        if (t0 > t1) std::swap(t0, t1);
        return t0 < 1.0 - eps && t1 > eps;
    }
    const double t = qp.cross(s) / rxs;
    const double u = qp.cross(r) / rxs;
    return t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps;
}

struct Polygon {
    std::vector<Vec2> vertices;  // simple, counter-clockwise

    void validate() const {
        if (vertices.size() < 3) throw std::invalid_argument("polygon needs >= 3 vertices");
        double area2 = 0.0;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const Vec2& a = vertices[i];
            const Vec2& b = vertices[(i + 1) % vertices.size()];
            area2 += a.cross(b);
        }
        if (area2 <= 0.0) throw std::invalid_argument("polygon must be counter-clockwise");
        // simplicity: no two non-adjacent edges intersect
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
                if (segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j],
                                       vertices[(j + 1) % n]))
                    throw std::invalid_argument("polygon self-intersects");
            }
        }
    }

    bool contains(const Vec2& p) const {
        bool inside = false;
        const std::size_t n = vertices.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = vertices[i];
            const Vec2& b = vertices[j];
            if ((a.y > p.y) != (b.y > p.y) &&
                p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
                inside = !inside;
        }
        return inside;
    }

    /// True iff the open segment (a, b) crosses this polygon.
    bool blocks_segment(const Vec2& a, const Vec2& b, double eps = 1e-9) const {
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (segments_intersect(a, b, vertices[i], vertices[(i + 1) % n], eps)) return true;
        }
        // fully inside counts as blocked
        const Vec2 mid = (a + b) * 0.5;
        return contains(mid) && contains(a + (b - a) * 0.25);
    }

    double distance_to(const Vec2& p) const {
        if (contains(p)) return 0.0;
        double best = std::numeric_limits<double>::infinity();
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            best = std::min(best, point_segment_distance(p, vertices[i], vertices[(i + 1) % n]));
        }
        return best;
    }
};

/// Rectangle footprint for a vehicle at (center, heading).
inline Polygon vehicle_footprint(const Vec2& center, double heading, double length,
                                 double width) {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const double hl = 0.5 * length;
    const double hw = 0.5 * width;
    Polygon poly;
    // counter-clockwise
    poly.vertices = {
        {center.x + c * hl - s * (-hw), center.y + s * hl + c * (-hw)},
        {center.x + c * hl - s * hw, center.y + s * hl + c * hw},
        {center.x - c * hl - s * hw, center.y - s * hl + c * hw},
        {center.x - c * hl - s * (-hw), center.y - s * hl + c * (-hw)},
    };
    return poly;
}

}  // namespace occlusim

#endif  // OCCLUSIM_GEOMETRY_HPP
