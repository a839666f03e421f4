#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

#include "sketchparse/dataprep/dataprep.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::dataprep {

namespace {

struct Pt {
  double x, y;
};

struct Part {
  std::uint8_t id = 0;
  double tone = 0.0;
};

// Rasterizes polygons in a local figure frame (front = +x, y down) onto the
// photo and label canvas. Later fills overwrite earlier ones.
class Painter {
 public:
  Painter(const taxonomy::Taxonomy& tax, const std::string& category, std::size_t size,
          numcore::Rng& rng)
      : tax_(tax), category_(tax.category(category)), branch_(tax.branch_of(category)), rng_(rng) {
    photo_ = Raster(size, size, static_cast<std::uint8_t>(rng.uniform(205, 245)));
    labels_ = LabelMap(size, size);
  }

  void set_frame(double cx, double cy, double scale, double tilt_deg, bool mirror) {
    cx_ = cx;
    cy_ = cy;
    scale_ = scale;
    const double t = tilt_deg * std::numbers::pi / 180.0;
    cos_ = std::cos(t);
    sin_ = std::sin(t);
    mirror_ = mirror;
  }

  bool has(const std::string& name) const {
    return std::find(category_.parts.begin(), category_.parts.end(), name) != category_.parts.end();
  }

  /// First name in `names` the category lists.
  Part part(std::initializer_list<const char*> names) {
    for (const char* n : names)
      if (has(n)) return tone_of(n);
    throw ConfigError("template for '" + category_.name + "' draws part '" + *names.begin() +
                      "' which the category does not list");
  }
  std::optional<Part> maybe(const char* name) {
    if (!has(name)) return std::nullopt;
    return tone_of(name);
  }

  void poly(const Part& p, const std::vector<Pt>& local) { fill(p.id, p.tone, local); }

  void ellipse(const Part& p, Pt c, double rx, double ry, double angle_deg = 0.0) {
    fill(p.id, p.tone, ellipse_points(c, rx, ry, angle_deg));
  }
  void ellipse_tone(const Part& p, double tone, Pt c, double rx, double ry, double angle_deg = 0.0) {
    fill(p.id, tone, ellipse_points(c, rx, ry, angle_deg));
  }

  /// Thick segment from a to b.
  void bar(const Part& p, Pt a, Pt b, double width) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) return;
    const double nx = -(b.y - a.y) / len * width / 2, ny = (b.x - a.x) / len * width / 2;
    poly(p, {{a.x + nx, a.y + ny}, {b.x + nx, b.y + ny}, {b.x - nx, b.y - ny}, {a.x - nx, a.y - ny}});
  }

  void rect(const Part& p, Pt c, double w, double h) {
    poly(p, {{c.x - w / 2, c.y - h / 2}, {c.x + w / 2, c.y - h / 2}, {c.x + w / 2, c.y + h / 2},
             {c.x - w / 2, c.y + h / 2}});
  }

  Figure finish(Pose pose) {
    for (auto& v : photo_.pixels()) {
      const double n = v + rng_.uniform(-6, 6);
      v = static_cast<std::uint8_t>(std::clamp(n, 0.0, 255.0));
    }
    return {std::move(photo_), std::move(labels_), pose};
  }

  numcore::Rng& rng() { return rng_; }

 private:
  Part tone_of(const std::string& name) {
    auto it = tones_.find(name);
    if (it == tones_.end()) {
      const int id = *tax_.part_id(branch_, name);
      it = tones_.emplace(name, Part{static_cast<std::uint8_t>(id), rng_.uniform(40, 170)}).first;
    }
    return it->second;
  }

  static std::vector<Pt> ellipse_points(Pt c, double rx, double ry, double angle_deg) {
    constexpr int kSides = 48;
    const double a = angle_deg * std::numbers::pi / 180.0;
    std::vector<Pt> pts;
    for (int i = 0; i < kSides; ++i) {
      const double t = 2 * std::numbers::pi * i / kSides;
      const double ex = rx * std::cos(t), ey = ry * std::sin(t);
      pts.push_back({c.x + ex * std::cos(a) - ey * std::sin(a), c.y + ex * std::sin(a) + ey * std::cos(a)});
    }
    return pts;
  }

  Pt to_canvas(Pt p) const {
    double x = p.x * cos_ - p.y * sin_;
    const double y = p.x * sin_ + p.y * cos_;
    if (mirror_) x = -x;
    return {cx_ + scale_ * x, cy_ + scale_ * y};
  }

  void fill(std::uint8_t id, double tone, const std::vector<Pt>& local) {
    std::vector<Pt> v;
    v.reserve(local.size());
    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
    for (const auto& p : local) {
      v.push_back(to_canvas(p));
      x0 = std::min(x0, v.back().x);
      x1 = std::max(x1, v.back().x);
      y0 = std::min(y0, v.back().y);
      y1 = std::max(y1, v.back().y);
    }
    const long w = static_cast<long>(labels_.width()), h = static_cast<long>(labels_.height());
    const long xa = std::max(0L, static_cast<long>(std::floor(x0))), xb = std::min(w - 1, static_cast<long>(std::ceil(x1)));
    const long ya = std::max(0L, static_cast<long>(std::floor(y0))), yb = std::min(h - 1, static_cast<long>(std::ceil(y1)));
    const auto shade = static_cast<std::uint8_t>(std::clamp(tone, 0.0, 255.0));
    for (long y = ya; y <= yb; ++y) {
      const double py = y + 0.5;
      for (long x = xa; x <= xb; ++x) {
        const double px = x + 0.5;
        bool inside = false;
        for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
          if ((v[i].y > py) != (v[j].y > py) &&
              px < (v[j].x - v[i].x) * (py - v[i].y) / (v[j].y - v[i].y) + v[i].x) {
            inside = !inside;
          }
        }
        if (inside) {
          labels_.at(x, y) = id;
          photo_.at(x, y) = shade;
        }
      }
    }
  }

  const taxonomy::Taxonomy& tax_;
  const taxonomy::Category& category_;
  std::size_t branch_;
  numcore::Rng& rng_;
  Raster photo_;
  LabelMap labels_;
  std::map<std::string, Part> tones_;
  double cx_ = 0, cy_ = 0, scale_ = 1, cos_ = 1, sin_ = 0;
  bool mirror_ = false;
};

enum class BodyShape { kEllipse, kBox, kFluffy };
enum class Ears { kNone, kPointy, kFloppy };

struct AnimalStyle {
  double rx, ry, head_r, snout, leg_len, leg_w, tail_len, tail_w, tail_deg;
  Ears ears;
  BodyShape body;
  double neck;
  bool horns;
};

std::vector<Pt> superellipse(double rx, double ry, double p) {
  std::vector<Pt> pts;
  for (int i = 0; i < 48; ++i) {
    const double t = 2 * std::numbers::pi * i / 48;
    const double c = std::cos(t), s = std::sin(t);
    pts.push_back({rx * std::copysign(std::pow(std::abs(c), 2 / p), c),
                   ry * std::copysign(std::pow(std::abs(s), 2 / p), s)});
  }
  return pts;
}

void markings(Painter& P, const Part& body, double rx, double ry) {
  auto& rng = P.rng();
  const int n = static_cast<int>(rng.below(3));
  for (int i = 0; i < n; ++i) {
    const double tone = std::clamp(body.tone + (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(35, 60), 10.0, 200.0);
    P.ellipse_tone(body, tone, {rng.uniform(-0.45, 0.45) * rx, rng.uniform(-0.35, 0.35) * ry},
                   rng.uniform(0.12, 0.25) * rx, rng.uniform(0.15, 0.3) * ry, rng.uniform(0, 180));
  }
}

void draw_body(Painter& P, const Part& body, const AnimalStyle& s, double rx, double ry) {
  switch (s.body) {
    case BodyShape::kEllipse:
      P.ellipse(body, {0, 0}, rx, ry);
      break;
    case BodyShape::kBox:
      P.poly(body, superellipse(rx, ry, 4.0));
      break;
    case BodyShape::kFluffy:
      P.ellipse(body, {0, 0}, rx, ry);
      for (int i = 0; i < 10; ++i) {
        const double t = 2 * std::numbers::pi * (i + 0.5) / 10;
        P.ellipse(body, {0.88 * rx * std::cos(t), 0.88 * ry * std::sin(t)}, 0.3 * ry, 0.3 * ry);
      }
      break;
  }
  markings(P, body, rx, ry);
}

void draw_head(Painter& P, const AnimalStyle& s, Pt h, double r, bool front_view) {
  const Part head = P.part({"head"});
  const double elong = front_view ? 1.0 : s.snout;
  if (s.ears == Ears::kPointy) {
    const double sp = front_view ? 0.55 : 0.35;
    for (double side : {-1.0, 1.0}) {
      const double ex = h.x + side * sp * r;
      P.poly(head, {{ex - 0.35 * r, h.y - 0.6 * r}, {ex, h.y - 1.5 * r}, {ex + 0.35 * r, h.y - 0.6 * r}});
    }
  }
  if (s.horns) {
    const Part horn = P.part({"horn", "head"});
    for (double side : {-1.0, 1.0}) {
      const double ex = h.x + side * 0.5 * r;
      P.poly(horn, {{ex - 0.15 * r, h.y - 0.7 * r}, {ex + side * 0.6 * r, h.y - 1.45 * r}, {ex + 0.2 * r, h.y - 0.7 * r}});
    }
  }
  P.ellipse(head, {h.x + (elong - 1.0) * r * 0.5, h.y}, r * elong, r * 0.9);
  if (s.ears == Ears::kFloppy) {
    if (front_view) {
      for (double side : {-1.0, 1.0}) P.ellipse(head, {h.x + side * 0.95 * r, h.y + 0.2 * r}, 0.3 * r, 0.75 * r);
    } else {
      P.ellipse(head, {h.x - 0.45 * r, h.y + 0.25 * r}, 0.32 * r, 0.8 * r, 15);
    }
  }
}

void draw_animal(Painter& P, const AnimalStyle& base, Pose pose) {
  auto& rng = P.rng();
  auto J = [&](double v) { return v * rng.uniform(0.88, 1.12); };
  AnimalStyle s = base;
  const double rx = J(s.rx), ry = J(s.ry), r = J(s.head_r), leg_len = J(s.leg_len);
  const Part body = P.part({"body", "torso"});
  const Part leg = P.part({"leg"});
  const auto hoof = P.maybe("hoof");
  const int dy = pose_dy(pose);

  if (pose_dx(pose) == 0) {
    const double fx = 0.6 * rx;
    const bool away = pose == Pose::kN;
    for (double side : {-1.0, 1.0}) {
      const double x = side * 0.45 * fx;
      P.bar(leg, {x, 0.2 * ry}, {x + rng.uniform(-2, 2), 0.85 * ry + leg_len}, s.leg_w * 1.1);
      if (hoof) P.rect(*hoof, {x, 0.85 * ry + leg_len - 2}, s.leg_w * 1.3, 4);
    }
    if (away) draw_head(P, s, {0, -ry - 0.35 * r - s.neck * 0.6}, r, true);
    draw_body(P, body, s, fx, ry);
    if (away) {
      if (auto tail = P.maybe("tail")) {
        const double up = s.tail_deg > 0 ? -1.0 : 1.0;
        P.bar(*tail, {0.05 * fx, -0.2 * ry}, {0.25 * fx, -0.2 * ry + up * J(s.tail_len)}, s.tail_w);
      }
    } else {
      if (s.neck > 0) P.bar(P.part({"neck", "body"}), {0, -0.4 * ry}, {0, -ry - 0.3 * s.neck}, 0.9 * r);
      draw_head(P, s, {0, -0.55 * ry - 0.5 * s.neck}, r * 1.1, true);
    }
    return;
  }

  // Side view: far legs, tail, body, near legs, neck and head.
  const double xs[4] = {-0.62, 0.5, -0.72, 0.66};
  for (int i = 0; i < 4; ++i) {
    const double x = xs[i] * rx;
    const Pt top{x, 0.2 * ry}, bottom{x + rng.uniform(-3, 3), 0.85 * ry + leg_len};
    P.bar(leg, top, bottom, s.leg_w);
    if (hoof) P.rect(*hoof, {bottom.x, bottom.y - 2}, s.leg_w * 1.3, 4);
    if (i == 1) {
      if (auto tail = P.maybe("tail")) {
        const double a = J(s.tail_deg) * std::numbers::pi / 180;
        const Pt anchor{-0.9 * rx, -0.35 * ry};
        const double len = J(s.tail_len);
        const Pt end{anchor.x - len * std::cos(a), anchor.y - len * std::sin(a)};
        P.bar(*tail, anchor, end, s.tail_w);
        if (s.horns) P.ellipse(*tail, end, s.tail_w * 1.1, s.tail_w * 1.6);
      }
      draw_body(P, body, s, rx, ry);
    }
  }
  Pt h{0.85 * rx + 0.6 * r, -0.75 * ry + dy * 0.55 * ry};
  if (s.neck > 0) {
    h = {0.9 * rx + 0.5 * s.neck, -ry - 0.6 * s.neck + dy * 0.5 * ry};
    P.bar(P.part({"neck", "body"}), {0.65 * rx, -0.3 * ry}, h, 0.85 * r);
  }
  draw_head(P, s, h, r, false);
}

void draw_bird(Painter& P, Pose pose) {
  auto& rng = P.rng();
  auto J = [&](double v) { return v * rng.uniform(0.88, 1.12); };
  const double rx = J(19), ry = J(12), r = J(8);
  const Part body = P.part({"body", "torso"});
  const Part head = P.part({"head", "beak"});
  const Part beak = P.part({"beak", "head"});
  const Part wing = P.part({"wing"});
  const auto tail = P.maybe("tail");
  const auto leg = P.maybe("leg");
  const int dy = pose_dy(pose);

  if (pose_dx(pose) == 0) {
    const double span = J(20);
    if (leg)
      for (double side : {-1.0, 1.0}) P.bar(*leg, {side * 4, 0.7 * ry}, {side * 5, ry + 9}, 2.5);
    if (pose == Pose::kN && tail) P.poly(*tail, {{-5, 0.4 * ry}, {5, 0.4 * ry}, {9, ry + 14}, {-9, ry + 14}});
    for (double side : {-1.0, 1.0}) {
      P.poly(wing, {{side * 0.3 * ry, -0.3 * ry}, {side * (0.6 * ry + span), -ry - 6}, {side * (0.5 * ry + span * 0.8), -0.1 * ry}, {side * 0.3 * ry, 0.3 * ry}});
    }
    P.ellipse(body, {0, 0}, 0.75 * ry, ry);
    markings(P, body, 0.6 * ry, ry);
    const double hy = pose == Pose::kN ? -ry - 0.4 * r : -0.6 * ry;
    P.ellipse(head, {0, hy}, r, r);
    if (pose == Pose::kS) P.poly(beak, {{-3, hy + 1}, {3, hy + 1}, {0, hy + 0.5 * r + 5}});
    return;
  }

  if (leg) {
    P.bar(*leg, {-0.1 * rx, 0.6 * ry}, {-0.15 * rx, ry + 9}, 2.5);
    P.bar(*leg, {0.15 * rx, 0.6 * ry}, {0.2 * rx, ry + 9}, 2.5);
  }
  if (tail) {
    const double len = J(15);
    P.poly(*tail, {{-0.7 * rx, -0.3 * ry}, {-0.7 * rx, 0.35 * ry}, {-rx - len, 0.55 * ry}, {-rx - len, -0.1 * ry}});
  }
  P.ellipse(body, {0, 0}, rx, ry, -8);
  markings(P, body, rx, ry);
  if (rng.uniform() < 0.5) {
    P.ellipse(wing, {-0.15 * rx, 0.0}, 0.65 * rx, 0.5 * ry, -10);
  } else {
    P.poly(wing, {{0.35 * rx, -0.35 * ry}, {-0.55 * rx, -0.25 * ry}, {-0.5 * rx - 6, -ry - J(16)}});
  }
  const Pt h{0.85 * rx + 0.3 * r, -0.7 * ry + dy * 0.5 * ry};
  P.ellipse(head, h, r, r);
  P.poly(beak, {{h.x + 0.7 * r, h.y - 3}, {h.x + r + J(7), h.y + 0.5}, {h.x + 0.7 * r, h.y + 3}});
}

void draw_airplane(Painter& P, Pose pose) {
  auto& rng = P.rng();
  auto J = [&](double v) { return v * rng.uniform(0.88, 1.12); };
  const Part body = P.part({"body", "torso"});
  const Part wing = P.part({"wing"});
  const Part tail = P.part({"tail"});
  const auto engine = P.maybe("engine");
  const auto wheel = P.maybe("wheel");

  if (pose_dx(pose) == 0) {
    const double r = J(10), span = J(46);
    if (pose == Pose::kS) P.poly(tail, {{-2.5, -0.5 * r}, {2.5, -0.5 * r}, {1.5, -r - J(16)}, {-1.5, -r - J(16)}});
    P.poly(wing, {{-span, -2}, {span, -2}, {span, 3}, {-span, 3}});
    P.ellipse(body, {0, 0}, r, r);
    if (pose == Pose::kN) P.poly(tail, {{-2.5, -0.3 * r}, {2.5, -0.3 * r}, {1.5, -r - J(16)}, {-1.5, -r - J(16)}});
    if (engine)
      for (double side : {-1.0, 1.0}) P.ellipse(*engine, {side * 0.5 * span, 7}, 4.5, 4.5);
    if (wheel)
      for (double side : {-1.0, 1.0}) P.ellipse(*wheel, {side * 0.35 * r, r + 3}, 2.5, 3);
    return;
  }

  const double rx = J(44), ry = J(7.5);
  P.poly(wing, {{0.05 * rx, -0.5 * ry}, {-0.15 * rx, -0.5 * ry}, {-0.32 * rx, -ry - J(13)}, {-0.22 * rx, -ry - J(13)}});
  if (wheel)
    for (double x : {-0.3, 0.45}) P.ellipse(*wheel, {x * rx, ry + 3}, 3, 3);
  P.ellipse(body, {0, 0}, rx, ry);
  P.poly(body, {{0.7 * rx, -0.6 * ry}, {rx + 4, 0}, {0.7 * rx, 0.6 * ry}});
  P.poly(tail, {{-0.72 * rx, -0.6 * ry}, {-0.98 * rx, -0.6 * ry}, {-1.02 * rx, -ry - J(15)}, {-0.9 * rx, -ry - J(15)}});
  P.poly(tail, {{-0.75 * rx, 0}, {-rx, 0}, {-rx - 3, 5}, {-0.82 * rx, 5}});
  const double wy = J(20);
  P.poly(wing, {{0.12 * rx, 0}, {-0.12 * rx, 0}, {-0.35 * rx, wy}, {-0.22 * rx, wy}});
  if (engine) P.ellipse(*engine, {-0.12 * rx, 0.55 * wy}, 7, 3.5);
}

void draw_car(Painter& P, Pose pose) {
  auto& rng = P.rng();
  auto J = [&](double v) { return v * rng.uniform(0.88, 1.12); };
  const Part body = P.part({"body"});
  const Part window = P.part({"window"});
  const Part wheel = P.part({"wheel"});
  const auto light = P.maybe("light");
  const auto door = P.maybe("door");
  const int dy = pose_dy(pose);

  if (pose_dx(pose) == 0) {
    const double w = J(58), h = J(22), ch = J(15);
    for (double side : {-1.0, 1.0}) P.ellipse(wheel, {side * 0.38 * w, 0.5 * h + 2}, 5, 8);
    P.poly(body, {{-0.5 * w, -0.5 * h}, {0.5 * w, -0.5 * h}, {0.5 * w, 0.5 * h}, {-0.5 * w, 0.5 * h}});
    P.poly(body, {{-0.4 * w, -0.5 * h}, {0.4 * w, -0.5 * h}, {0.3 * w, -0.5 * h - ch}, {-0.3 * w, -0.5 * h - ch}});
    const double inset = pose == Pose::kS ? 2.5 : 5.0;
    P.poly(window, {{-0.4 * w + inset, -0.5 * h - 2}, {0.4 * w - inset, -0.5 * h - 2},
                    {0.3 * w - inset, -0.5 * h - ch + 2.5}, {-0.3 * w + inset, -0.5 * h - ch + 2.5}});
    if (light)
      for (double side : {-1.0, 1.0}) P.ellipse(*light, {side * 0.35 * w, -0.1 * h}, 4, 3);
    return;
  }

  const double w = J(82), h = J(19), ch = J(15);
  const double r = J(9);
  P.poly(body, superellipse(0.5 * w, 0.5 * h, 5.0));
  const double b0 = -0.32 * w, b1 = 0.22 * w, t0 = -0.24 * w, t1 = 0.06 * w;
  const double top = -0.5 * h - ch;
  P.poly(body, {{b0, -0.4 * h}, {b1, -0.4 * h}, {t1, top}, {t0, top}});
  // Window count encodes the vertical pose component.
  const int n = 2 + dy;
  const double wy0 = -0.5 * h - 1.5, wy1 = top + 2.5;
  const double xa = b0 + 4, xb = b1 - 4, ta = t0 + 3, tb = t1 - 2;
  for (int i = 0; i < n; ++i) {
    const double f0 = static_cast<double>(i) / n, f1 = static_cast<double>(i + 1) / n;
    const double g = 1.2;
    P.poly(window, {{xa + (xb - xa) * f0 + g, wy0}, {xa + (xb - xa) * f1 - g, wy0},
                    {ta + (tb - ta) * f1 - g, wy1}, {ta + (tb - ta) * f0 + g, wy1}});
  }
  if (door) P.rect(*door, {-0.05 * w, 0.05 * h}, 0.2 * w, 0.6 * h);
  if (light) P.ellipse(*light, {0.47 * w, -0.1 * h}, 3, 2.5);
  for (double x : {-0.3, 0.3}) P.ellipse(wheel, {x * w, 0.5 * h}, r, r);
}

void draw_bus(Painter& P, Pose pose) {
  auto& rng = P.rng();
  auto J = [&](double v) { return v * rng.uniform(0.88, 1.12); };
  const Part body = P.part({"body"});
  const Part window = P.part({"window"});
  const Part wheel = P.part({"wheel"});
  const auto door = P.maybe("door");
  const int dy = pose_dy(pose);

  if (pose_dx(pose) == 0) {
    const double w = J(50), h = J(46);
    for (double side : {-1.0, 1.0}) P.ellipse(wheel, {side * 0.38 * w, 0.5 * h}, 5, 8);
    P.poly(body, superellipse(0.5 * w, 0.5 * h, 6.0));
    const double wh = pose == Pose::kS ? 0.4 * h : 0.25 * h;
    P.rect(window, {0, -0.45 * h + wh / 2 + 3}, w - 8, wh);
    return;
  }

  const double w = J(96), h = J(40), r = J(9);
  P.poly(body, superellipse(0.5 * w, 0.5 * h, 6.0));
  const int n = 4 + dy;
  const double x0 = -0.42 * w, x1 = 0.3 * w, wy = -0.18 * h, wh = J(0.3) * h;
  for (int i = 0; i < n; ++i) {
    const double a = x0 + (x1 - x0) * i / n, b = x0 + (x1 - x0) * (i + 1) / n;
    P.rect(window, {(a + b) / 2, wy}, (b - a) - 3, wh);
  }
  P.rect(window, {0.42 * w, -0.05 * h}, 0.1 * w, 0.55 * h);
  if (door) P.rect(*door, {0.34 * w, 0.2 * h}, 0.08 * w, 0.4 * h);
  for (double x : {-0.3, 0.28}) P.ellipse(wheel, {x * w, 0.5 * h}, r, r);
}

using Template = std::function<void(Painter&, Pose)>;

const std::map<std::string, Template>& templates() {
  static const std::map<std::string, Template> kTemplates = [] {
    std::map<std::string, Template> t;
    auto animal = [](AnimalStyle s) { return [s](Painter& P, Pose p) { draw_animal(P, s, p); }; };
    t["cat"] = animal({24, 13, 10, 1.0, 13, 4.5, 20, 3.5, 55, Ears::kPointy, BodyShape::kEllipse, 0, false});
    t["dog"] = animal({27, 14, 10, 1.5, 15, 5.0, 13, 4.0, 35, Ears::kFloppy, BodyShape::kEllipse, 0, false});
    t["sheep"] = animal({27, 17, 8, 1.3, 9, 5.0, 6, 6.0, 10, Ears::kNone, BodyShape::kFluffy, 0, false});
    t["cow"] = animal({32, 17, 10, 1.4, 17, 7.0, 20, 3.0, -70, Ears::kNone, BodyShape::kBox, 0, true});
    t["horse"] = animal({31, 14, 8, 1.8, 23, 5.0, 22, 6.0, -50, Ears::kPointy, BodyShape::kEllipse, 16, false});
    t["bird"] = draw_bird;
    t["airplane"] = draw_airplane;
    t["car"] = draw_car;
    t["bus"] = draw_bus;
    return t;
  }();
  return kTemplates;
}

// Figures are drawn at this magnification, then shrunk if their bounding box
// exceeds kMaxExtent of a 128 canvas.
constexpr double kFigureScale = 1.5;
constexpr double kMaxExtent = 112.0;

}  // namespace

std::vector<std::string> template_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : templates()) out.push_back(name);
  return out;
}

Figure draw_figure(const taxonomy::Taxonomy& tax, const std::string& category, std::uint64_t seed,
                   std::size_t size) {
  const auto it = templates().find(category);
  if (it == templates().end()) throw ConfigError("no drawing template for category '" + category + "'");
  tax.category(category);  // must exist in the taxonomy
  numcore::Rng rng(seed);
  const Pose pose = kAllPoses[rng.below(kPoseCount)];
  const double k = static_cast<double>(size) / 128.0;
  const double tilt = category == "airplane" && pose_dx(pose) != 0 ? 18.0 * pose_dy(pose) : 0.0;
  const double scale = k * kFigureScale * rng.uniform(0.9, 1.1);
  const double cx = k * (64 + rng.uniform(-5, 5)), cy = k * (64 + rng.uniform(-5, 5));
  auto render = [&](double sc, double x, double y) {
    numcore::Rng r = rng;  // both passes see the same stream
    Painter P(tax, category, size, r);
    P.set_frame(x, y, sc, tilt, pose_dx(pose) < 0);
    it->second(P, pose);
    return P.finish(pose);
  };
  // Probe at half scale so the extent is never clipped by the canvas.
  const Figure probe = render(0.5 * scale, 0.5 * size, 0.5 * size);
  long x0 = static_cast<long>(size), y0 = x0, x1 = -1, y1 = -1;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      if (probe.labels.at(x, y)) {
        x0 = std::min<long>(x0, x), x1 = std::max<long>(x1, x);
        y0 = std::min<long>(y0, y), y1 = std::max<long>(y1, y);
      }
  if (x1 < 0) throw ConfigError("template '" + category + "' drew nothing");
  const double fit = std::min({1.0, k * kMaxExtent / (2.0 * (x1 - x0 + 1)), k * kMaxExtent / (2.0 * (y1 - y0 + 1))});
  const double ox = (x0 + x1 + 1) - 1.0 * size, oy = (y0 + y1 + 1) - 1.0 * size;
  return render(scale * fit, cx - ox * fit, cy - oy * fit);
}

}  // namespace sketchparse::dataprep
