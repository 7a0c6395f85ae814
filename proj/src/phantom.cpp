#include "tomonet/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "tomonet/rng.hpp"

namespace tomonet {

PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "shepp_logan") return PhantomKind::SheppLogan;
  if (s == "ellipses") return PhantomKind::Ellipses;
  if (s == "hot_spots") return PhantomKind::HotSpots;
  throw config_error("unknown phantom kind: " + s);
}

std::string to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::SheppLogan: return "shepp_logan";
    case PhantomKind::Ellipses: return "ellipses";
    case PhantomKind::HotSpots: return "hot_spots";
  }
  return "?";
}

namespace {

// Ellipse in normalized coordinates: the image maps to [-1, 1]^2.
struct Ellipse {
  double value;    // additive intensity
  double a, b;     // semi-axes along x and y before rotation
  double x0, y0;   // center
  double phi;      // rotation, radians
  int label;       // 0 = not a region of interest
};

bool inside(const Ellipse& e, double x, double y) {
  double dx = x - e.x0, dy = y - e.y0;
  double c = std::cos(e.phi), s = std::sin(e.phi);
  double u = (dx * c + dy * s) / e.a;
  double v = (-dx * s + dy * c) / e.b;
  return u * u + v * v <= 1.0;
}

// Toft's variant of the Shepp-Logan head phantom; all composite values stay
// in [0, 1].
std::vector<Ellipse> shepp_logan_ellipses() {
  const double d = M_PI / 180.0;
  return {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0, 0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0, 0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0 * d, 1},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0 * d, 2},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0, 3},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0, 4},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0, 5},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0, 6},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0, 7},
      {0.1, 0.0460, 0.0230, 0.06, -0.605, 90.0 * d, 8},
  };
}

// Pixel values are area samples (4x4 sub-pixel average) so edges carry
// partial-volume fractions instead of binary steps; labels come from the
// pixel center.
Phantom rasterize(const std::vector<Ellipse>& ellipses, int size) {
  Phantom p;
  p.image = Tensor3(size, size, 1);
  p.labels.assign(static_cast<size_t>(size) * size, 0);
  const double scale = 2.0 / size;
  const int ss = 4;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double value = 0.0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          double nx = (x + (sx + 0.5) / ss) * scale - 1.0;
          double ny = (y + (sy + 0.5) / ss) * scale - 1.0;
          double v = 0.0;
          for (const Ellipse& e : ellipses)
            if (inside(e, nx, ny)) v += e.value;
          value += std::clamp(v, 0.0, 1.0);
        }
      p.image.at(x, y, 0) = value / (ss * ss);

      double cx = (x + 0.5) * scale - 1.0, cy = (y + 0.5) * scale - 1.0;
      int label = 0;
      for (const Ellipse& e : ellipses)
        if (e.label > 0 && inside(e, cx, cy)) label = e.label;
      p.labels[static_cast<size_t>(y) * size + x] = label;
    }
  }
  return p;
}

// Drops labels with zero pixels and renumbers the rest to 1..K.
void compact_labels(Phantom& p, int max_label) {
  std::vector<long long> count(max_label + 1, 0);
  for (int l : p.labels) ++count[l];
  std::vector<int> remap(max_label + 1, 0);
  int next = 0;
  for (int l = 1; l <= max_label; ++l)
    if (count[l] > 0) remap[l] = ++next;
  for (int& l : p.labels) l = remap[l];
  p.n_labels = next;
}

Phantom make_random_ellipses(int size, uint64_t seed) {
  Rng rng(seed);
  int n = rng.uniform_int(3, 8);
  std::vector<Ellipse> shapes;
  for (int i = 0; i < n; ++i) {
    Ellipse e;
    e.a = rng.uniform(0.08, 0.45);
    e.b = rng.uniform(0.08, 0.45);
    double reach = std::max(e.a, e.b);
    double radius = rng.uniform(0.0, std::max(0.0, 0.92 - reach));
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    e.x0 = radius * std::cos(angle);
    e.y0 = radius * std::sin(angle);
    e.phi = rng.uniform(0.0, M_PI);
    e.value = rng.uniform(0.15, 0.85);
    e.label = i + 1;
    shapes.push_back(e);
  }
  Phantom p = rasterize(shapes, size);
  compact_labels(p, n);
  return p;
}

Phantom make_hot_spots(int size, uint64_t seed) {
  Rng rng(seed);
  std::vector<Ellipse> shapes;

  Ellipse body;
  body.a = rng.uniform(0.55, 0.75);
  body.b = rng.uniform(0.55, 0.75);
  body.x0 = rng.uniform(-0.08, 0.08);
  body.y0 = rng.uniform(-0.08, 0.08);
  body.phi = rng.uniform(0.0, M_PI);
  body.value = rng.uniform(0.2, 0.32);
  body.label = 1;
  shapes.push_back(body);

  int n_spots = rng.uniform_int(1, 3);
  for (int i = 0; i < n_spots; ++i) {
    Ellipse spot;
    double radius = rng.uniform(0.05, 0.11);
    spot.a = radius;
    spot.b = radius;
    double reach = std::min(body.a, body.b) - radius - 0.05;
    double dist = rng.uniform(0.0, std::max(0.0, reach));
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    spot.x0 = body.x0 + dist * std::cos(angle);
    spot.y0 = body.y0 + dist * std::sin(angle);
    spot.phi = 0.0;
    spot.value = rng.uniform(0.6, 0.75);
    spot.label = 2 + i;
    shapes.push_back(spot);
  }
  Phantom p = rasterize(shapes, size);
  compact_labels(p, 1 + n_spots);
  return p;
}

}  // namespace

Phantom make_phantom(PhantomKind kind, int size, uint64_t seed) {
  if (size < 32) throw config_error("make_phantom: size must be >= 32");
  Phantom p;
  switch (kind) {
    case PhantomKind::SheppLogan:
      p = rasterize(shepp_logan_ellipses(), size);
      compact_labels(p, 8);
      break;
    case PhantomKind::Ellipses:
      p = make_random_ellipses(size, seed);
      break;
    case PhantomKind::HotSpots:
      p = make_hot_spots(size, seed);
      break;
  }
  return p;
}

}  // namespace tomonet
