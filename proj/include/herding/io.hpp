#ifndef HERDING__IO_HPP_
#define HERDING__IO_HPP_

/// \file
/// \brief Scenario documents (JSON) and episode emitters: trajectory CSV, metrics JSON and an
/// overhead SVG plot.
///
/// Scenario schema (positions in meters, times in seconds; every key but `sheep` and one of
/// `dogs` / `dog_ring` is optional):
///
///     {
///       "name": "2v2",
///       "sheep": [[-1.8, -0.25], [-1.7, 0.23]],
///       "dogs": [[-0.7, 0.3], [-0.7, -0.3]],
///       "dog_ring": {"count": 2, "r_min": 0.7, "r_max": 1.0, "center": [0, 0]},
///       "params": {"k_s": 0.5, "k_g": 1, "k_d": 0.1, "r_s": 0.4, "goal": [0, 0]},
///       "zones": [{"center": [0, 0], "radius": 0.6, "buffer": 0.1}],
///       "controller": {"kind": "dual", "k_max": 1000, "gamma0": 1,
///                      "step_rule": "diminishing", "averaging": "uniform_with_self"},
///       "gains": {"base": 1, "margin": 0.5},
///       "dt": 0.001, "t_end": 20, "seed": 0,
///       "bounds": {"l_s": 0.05, "m_s": 6, "l_d": 0.02, "m_g": 6, "m_p": 6, "u_d_max": 2}
///     }

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "herding/sim.hpp"

namespace herding::io
{

using nlohmann::json;

enum class ScenarioErrorCode { syntax = 1, schema = 2, initial_breach = 3, non_positive_dt = 4 };

inline const char * to_string(ScenarioErrorCode c)
{
  switch (c) {
    case ScenarioErrorCode::syntax:
      return "syntax";
    case ScenarioErrorCode::schema:
      return "schema";
    case ScenarioErrorCode::initial_breach:
      return "initial breach";
    case ScenarioErrorCode::non_positive_dt:
      return "non-positive dt";
  }
  return "unknown";
}

class ScenarioError : public std::runtime_error
{
public:
  ScenarioError(ScenarioErrorCode code, std::size_t line, const std::string & message)
  : std::runtime_error(
      "line " + std::to_string(line) + ": " + to_string(code) + " error: " + message),
    code_(code),
    line_(line)
  {
  }

  ScenarioErrorCode code() const { return code_; }
  std::size_t line() const { return line_; }

private:
  ScenarioErrorCode code_;
  std::size_t line_;
};

// ---------------------------------------------------------------------------------------------
// Formatting

/// Shortest text that reads back to the same double.
inline std::string format_double(double v)
{
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int precision)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------------------------
// Parsing with source lines

namespace detail
{

struct LineState
{
  std::size_t line = 1;
  std::size_t token_line = 1;  ///< line of the last non-whitespace character consumed
};

/// Feeds nlohmann's lexer while counting lines.
class CountingIterator
{
public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char *;
  using reference = const char &;

  CountingIterator() = default;
  CountingIterator(const char * p, LineState * st) : p_(p), st_(st) {}

  reference operator*() const { return *p_; }
  CountingIterator & operator++()
  {
    const char c = *p_;
    if (c == '\n') {
      ++st_->line;
    } else if (c != ' ' && c != '\t' && c != '\r') {
      st_->token_line = st_->line;
    }
    ++p_;
    return *this;
  }
  CountingIterator operator++(int)
  {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const CountingIterator & o) const { return p_ == o.p_; }

private:
  const char * p_ = nullptr;
  LineState * st_ = nullptr;
};

/// Builds the DOM and records the source line of every value, keyed by JSON pointer.
class LocatingSax
{
public:
  using number_integer_t = json::number_integer_t;
  using number_unsigned_t = json::number_unsigned_t;
  using number_float_t = json::number_float_t;
  using string_t = json::string_t;
  using binary_t = json::binary_t;

  LocatingSax(json & root, const LineState & st, std::map<std::string, std::size_t> & lines)
  : dom_(root, true), st_(st), lines_(lines)
  {
  }

  bool null() { return value(), dom_.null(); }
  bool boolean(bool v) { return value(), dom_.boolean(v); }
  bool number_integer(number_integer_t v) { return value(), dom_.number_integer(v); }
  bool number_unsigned(number_unsigned_t v) { return value(), dom_.number_unsigned(v); }
  bool number_float(number_float_t v, const string_t & s) { return value(), dom_.number_float(v, s); }
  bool string(string_t & v) { return value(), dom_.string(v); }
  bool binary(binary_t & v) { return value(), dom_.binary(v); }

  bool start_object(std::size_t n)
  {
    value();
    frames_.push_back({false, -1, {}});
    return dom_.start_object(n);
  }
  bool key(string_t & k)
  {
    frames_.back().key = k;
    lines_[path()] = st_.token_line;
    return dom_.key(k);
  }
  bool end_object()
  {
    frames_.pop_back();
    return dom_.end_object();
  }
  bool start_array(std::size_t n)
  {
    value();
    frames_.push_back({true, -1, {}});
    return dom_.start_array(n);
  }
  bool end_array()
  {
    frames_.pop_back();
    return dom_.end_array();
  }
  template <typename Exception>
  bool parse_error(std::size_t pos, const std::string & tok, const Exception & e)
  {
    return dom_.parse_error(pos, tok, e);
  }

private:
  struct Frame
  {
    bool is_array;
    long index;
    std::string key;
  };

  static std::string escape(const std::string & key)
  {
    std::string out;
    for (const char c : key) {
      out += c == '~' ? "~0" : c == '/' ? "~1" : std::string(1, c);
    }
    return out;
  }

  std::string path() const
  {
    std::string p;
    for (const auto & f : frames_) {
      p += '/';
      p += f.is_array ? std::to_string(f.index) : escape(f.key);
    }
    return p;
  }

  void value()
  {
    if (frames_.empty()) {
      lines_[""] = st_.token_line;
    } else if (frames_.back().is_array) {
      ++frames_.back().index;
      lines_[path()] = st_.token_line;
    }
  }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  const LineState & st_;
  std::map<std::string, std::size_t> & lines_;
  std::vector<Frame> frames_;
};

}  // namespace detail

/// A parsed JSON document with the source line of every value.
struct Document
{
  json root;
  std::map<std::string, std::size_t> lines;

  /// Line of `pointer`, or of its nearest recorded ancestor.
  std::size_t line_of(std::string pointer) const
  {
    for (;;) {
      if (const auto it = lines.find(pointer); it != lines.end()) {
        return it->second;
      }
      if (pointer.empty()) {
        return 1;
      }
      pointer.erase(pointer.rfind('/'));
    }
  }
};

inline Document parse_document(std::string_view text)
{
  Document doc;
  detail::LineState st;
  detail::LocatingSax sax(doc.root, st, doc.lines);
  try {
    json::sax_parse(
      detail::CountingIterator(text.data(), &st),
      detail::CountingIterator(text.data() + text.size(), &st), &sax);
  } catch (const json::parse_error & e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                            std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    std::string msg = e.what();
    if (const auto colon = msg.find(": "); colon != std::string::npos) {
      msg = msg.substr(colon + 2);
    }
    throw ScenarioError(ScenarioErrorCode::syntax, line, msg);
  }
  return doc;
}

namespace detail
{

/// Typed, located access to one JSON object.
class Reader
{
public:
  Reader(const Document & doc, const json & obj, std::string path)
  : doc_(doc), obj_(obj), path_(std::move(path))
  {
    if (!obj_.is_object()) {
      fail(path_, "expected an object");
    }
  }

  [[noreturn]] void fail(const std::string & pointer, const std::string & what) const
  {
    throw ScenarioError(
      ScenarioErrorCode::schema, doc_.line_of(pointer),
      (pointer.empty() ? std::string("document") : pointer) + ": " + what);
  }

  std::string at(const std::string & key) const { return path_ + "/" + key; }
  bool has(const std::string & key) const { return obj_.contains(key); }
  const json & raw(const std::string & key) const { return obj_.at(key); }
  std::size_t line(const std::string & key) const { return doc_.line_of(at(key)); }

  void only(std::initializer_list<std::string_view> allowed) const
  {
    for (const auto & [k, v] : obj_.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        fail(at(k), "unknown key '" + k + "'");
      }
    }
  }

  double number(const std::string & key, double fallback) const
  {
    return has(key) ? number(key) : fallback;
  }
  double number(const std::string & key) const
  {
    if (!has(key)) {
      fail(path_, "missing key '" + key + "'");
    }
    const auto & v = obj_.at(key);
    if (!v.is_number()) {
      fail(at(key), "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      fail(at(key), "expected a finite number");
    }
    return d;
  }
  double positive(const std::string & key, double fallback) const
  {
    const double d = number(key, fallback);
    if (!(d > 0.0)) {
      fail(at(key), "must be positive");
    }
    return d;
  }
  double non_negative(const std::string & key, double fallback) const
  {
    const double d = number(key, fallback);
    if (!(d >= 0.0)) {
      fail(at(key), "must be non-negative");
    }
    return d;
  }
  std::uint64_t count(const std::string & key, std::uint64_t fallback) const
  {
    if (!has(key)) {
      return fallback;
    }
    const auto & v = obj_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::string text(const std::string & key, const std::string & fallback) const
  {
    if (!has(key)) {
      return fallback;
    }
    const auto & v = obj_.at(key);
    if (!v.is_string()) {
      fail(at(key), "expected a string");
    }
    return v.get<std::string>();
  }

  Vec2 point(const json & v, const std::string & pointer) const
  {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(pointer, "expected [x, y]");
    }
    const Vec2 p(v[0].get<double>(), v[1].get<double>());
    if (!p.allFinite()) {
      fail(pointer, "coordinates must be finite");
    }
    return p;
  }
  Vec2 point(const std::string & key, const Vec2 & fallback) const
  {
    return has(key) ? point(obj_.at(key), at(key)) : fallback;
  }

  std::vector<Vec2> points(const std::string & key) const
  {
    const auto & v = obj_.at(key);
    if (!v.is_array()) {
      fail(at(key), "expected an array of [x, y]");
    }
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(point(v[i], at(key) + "/" + std::to_string(i)));
    }
    return out;
  }

  Reader child(const std::string & key) const { return Reader(doc_, obj_.at(key), at(key)); }

private:
  const Document & doc_;
  const json & obj_;
  std::string path_;
};

inline ControllerKind controller_kind(const Reader & r, const std::string & key)
{
  const auto s = r.text(key, "allocated");
  if (s == "centralized") {
    return ControllerKind::centralized;
  }
  if (s == "allocated") {
    return ControllerKind::allocated;
  }
  if (s == "dual") {
    return ControllerKind::dual;
  }
  r.fail(r.at(key), "controller must be centralized, allocated or dual (got '" + s + "')");
}

}  // namespace detail

inline const char * to_string(ControllerKind k)
{
  switch (k) {
    case ControllerKind::centralized:
      return "centralized";
    case ControllerKind::allocated:
      return "allocated";
    case ControllerKind::dual:
      return "dual";
  }
  return "unknown";
}

/// Parses `text` as a controller name; throws std::invalid_argument otherwise.
inline ControllerKind parse_controller_kind(const std::string & text)
{
  if (text == "centralized") {
    return ControllerKind::centralized;
  }
  if (text == "allocated") {
    return ControllerKind::allocated;
  }
  if (text == "dual") {
    return ControllerKind::dual;
  }
  throw std::invalid_argument("unknown controller '" + text + "'");
}

inline Scenario parse_scenario(std::string_view text)
{
  const Document doc = parse_document(text);
  const detail::Reader top(doc, doc.root, "");
  top.only(
    {"name", "sheep", "dogs", "dog_ring", "params", "zones", "controller", "gains", "dt", "t_end",
     "seed", "bounds"});

  Scenario sc;
  sc.name = top.text("name", sc.name);
  sc.seed = top.count("seed", 0);

  // dt first: it has its own error code.
  if (top.has("dt")) {
    if (!top.raw("dt").is_number()) {
      top.fail(top.at("dt"), "expected a number");
    }
    sc.dt = top.raw("dt").get<double>();
    if (!(sc.dt > 0.0)) {
      throw ScenarioError(
        ScenarioErrorCode::non_positive_dt, top.line("dt"),
        "dt must be positive (got " + format_double(sc.dt) + ")");
    }
  }
  sc.t_end = top.positive("t_end", sc.t_end);
  if (sc.t_end < sc.dt) {
    top.fail(top.at("t_end"), "t_end must be at least dt");
  }

  if (top.has("params")) {
    const auto p = top.child("params");
    p.only({"k_s", "k_g", "k_d", "r_s", "goal"});
    sc.params.k_s = p.non_negative("k_s", sc.params.k_s);
    sc.params.k_g = p.non_negative("k_g", sc.params.k_g);
    sc.params.k_d = p.non_negative("k_d", sc.params.k_d);
    sc.params.r_s = p.non_negative("r_s", sc.params.r_s);
    sc.params.goal = p.point("goal", sc.params.goal);
  }

  if (top.has("zones")) {
    const auto & zs = top.raw("zones");
    if (!zs.is_array()) {
      top.fail(top.at("zones"), "expected an array of zones");
    }
    for (std::size_t z = 0; z < zs.size(); ++z) {
      const detail::Reader zr(doc, zs[z], top.at("zones") + "/" + std::to_string(z));
      zr.only({"center", "radius", "buffer"});
      Zone zone;
      zone.center = zr.point("center", Vec2::Zero());
      zone.radius = zr.positive("radius", zone.radius);
      zone.buffer = zr.non_negative("buffer", zone.buffer);
      sc.zones.push_back(zone);
    }
  } else {
    sc.zones = {Zone{}};
  }
  if (sc.zones.empty()) {
    top.fail(top.at("zones"), "at least one zone is required");
  }

  if (!top.has("sheep")) {
    top.fail("", "missing key 'sheep'");
  }
  sc.initial.sheep = top.points("sheep");
  if (sc.initial.sheep.empty()) {
    top.fail(top.at("sheep"), "at least one sheep is required");
  }

  if (top.has("dogs") && top.has("dog_ring")) {
    top.fail(top.at("dog_ring"), "give either 'dogs' or 'dog_ring', not both");
  }
  if (top.has("dogs")) {
    sc.initial.dogs = top.points("dogs");
  } else if (top.has("dog_ring")) {
    const auto ring = top.child("dog_ring");
    ring.only({"count", "r_min", "r_max", "center"});
    const auto n = ring.count("count", 0);
    const double r_min = ring.non_negative("r_min", 0.0);
    const double r_max = ring.non_negative("r_max", 0.0);
    if (r_max < r_min) {
      ring.fail(ring.at("r_max"), "r_max must be at least r_min");
    }
    sc.initial.dogs =
      ring_sample_dogs(ring.point("center", sc.zones.front().center), n, r_min, r_max, sc.seed);
  } else {
    top.fail("", "missing key 'dogs' (or 'dog_ring')");
  }
  if (sc.initial.dogs.empty()) {
    top.fail(top.at(top.has("dogs") ? "dogs" : "dog_ring"), "at least one dog is required");
  }

  if (top.has("controller")) {
    const auto c = top.child("controller");
    c.only({"kind", "k_max", "gamma0", "step_rule", "averaging"});
    sc.controller.kind = detail::controller_kind(c, "kind");
    sc.controller.dual.k_max = c.count("k_max", sc.controller.dual.k_max);
    if (sc.controller.dual.k_max < 1) {
      c.fail(c.at("k_max"), "k_max must be at least 1");
    }
    sc.controller.dual.gamma0 = c.positive("gamma0", sc.controller.dual.gamma0);
    const auto rule = c.text("step_rule", "diminishing");
    if (rule == "diminishing") {
      sc.controller.dual.step_rule = StepRule::diminishing;
    } else if (rule == "constant") {
      sc.controller.dual.step_rule = StepRule::constant;
    } else {
      c.fail(c.at("step_rule"), "step_rule must be diminishing or constant");
    }
    const auto avg = c.text("averaging", "uniform_with_self");
    if (avg == "uniform_with_self") {
      sc.controller.dual.averaging = Averaging::uniform_with_self;
    } else if (avg == "paper_literal") {
      sc.controller.dual.averaging = Averaging::paper_literal;
    } else {
      c.fail(c.at("averaging"), "averaging must be uniform_with_self or paper_literal");
    }
  }

  if (top.has("gains")) {
    const auto g = top.child("gains");
    g.only({"base", "margin"});
    sc.gains.base = g.positive("base", sc.gains.base);
    sc.gains.margin = g.non_negative("margin", sc.gains.margin);
  }

  if (top.has("bounds")) {
    const auto b = top.child("bounds");
    b.only({"l_s", "m_s", "l_d", "m_g", "m_p", "u_d_max"});
    sc.bounds.l_s = b.positive("l_s", sc.bounds.l_s);
    sc.bounds.m_s = b.positive("m_s", sc.bounds.m_s);
    sc.bounds.l_d = b.positive("l_d", sc.bounds.l_d);
    sc.bounds.m_g = b.non_negative("m_g", sc.bounds.m_g);
    sc.bounds.m_p = b.non_negative("m_p", sc.bounds.m_p);
    sc.bounds.u_d_max = b.non_negative("u_d_max", sc.bounds.u_d_max);
    if (sc.bounds.m_s < sc.bounds.l_s) {
      b.fail(b.at("m_s"), "m_s must be at least l_s");
    }
  }

  for (std::size_t i = 0; i < sc.initial.sheep.size(); ++i) {
    for (std::size_t z = 0; z < sc.zones.size(); ++z) {
      if (!(barrier_h(sc.initial.sheep[i], sc.zones[z]) > 0.0)) {
        throw ScenarioError(
          ScenarioErrorCode::initial_breach, doc.line_of("/sheep/" + std::to_string(i)),
          "sheep " + std::to_string(i) + " starts inside zone " + std::to_string(z) +
            " (buffer included)");
      }
    }
  }
  try {
    sc.validate();
  } catch (const std::exception & e) {
    throw ScenarioError(ScenarioErrorCode::schema, 1, e.what());
  }
  return sc;
}

inline json point_json(const Vec2 & p) { return json::array({p.x(), p.y()}); }

/// Inverse of parse_scenario (dogs always written explicitly).
inline json scenario_to_json(const Scenario & sc)
{
  json j;
  j["name"] = sc.name;
  j["sheep"] = json::array();
  for (const auto & s : sc.initial.sheep) {
    j["sheep"].push_back(point_json(s));
  }
  j["dogs"] = json::array();
  for (const auto & d : sc.initial.dogs) {
    j["dogs"].push_back(point_json(d));
  }
  j["params"] = {
    {"k_s", sc.params.k_s}, {"k_g", sc.params.k_g},           {"k_d", sc.params.k_d},
    {"r_s", sc.params.r_s}, {"goal", point_json(sc.params.goal)}};
  j["zones"] = json::array();
  for (const auto & z : sc.zones) {
    j["zones"].push_back({{"center", point_json(z.center)}, {"radius", z.radius}, {"buffer", z.buffer}});
  }
  j["controller"] = {{"kind", to_string(sc.controller.kind)}};
  if (sc.controller.kind == ControllerKind::dual) {
    const auto & d = sc.controller.dual;
    j["controller"]["k_max"] = d.k_max;
    j["controller"]["gamma0"] = d.gamma0;
    j["controller"]["step_rule"] = d.step_rule == StepRule::diminishing ? "diminishing" : "constant";
    j["controller"]["averaging"] =
      d.averaging == Averaging::uniform_with_self ? "uniform_with_self" : "paper_literal";
  }
  j["gains"] = {{"base", sc.gains.base}, {"margin", sc.gains.margin}};
  j["dt"] = sc.dt;
  j["t_end"] = sc.t_end;
  j["seed"] = sc.seed;
  j["bounds"] = {
    {"l_s", sc.bounds.l_s}, {"m_s", sc.bounds.m_s}, {"l_d", sc.bounds.l_d},
    {"m_g", sc.bounds.m_g}, {"m_p", sc.bounds.m_p}, {"u_d_max", sc.bounds.u_d_max}};
  return j;
}

// ---------------------------------------------------------------------------------------------
// Episode emitters

inline std::vector<std::string> csv_header(std::size_t num_sheep, std::size_t num_dogs, std::size_t num_zones)
{
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < num_sheep; ++i) {
    cols.push_back("sheep" + std::to_string(i) + "_x");
    cols.push_back("sheep" + std::to_string(i) + "_y");
  }
  for (std::size_t k = 0; k < num_dogs; ++k) {
    cols.push_back("dog" + std::to_string(k) + "_x");
    cols.push_back("dog" + std::to_string(k) + "_y");
  }
  for (std::size_t i = 0; i < num_sheep; ++i) {
    for (std::size_t z = 0; z < num_zones; ++z) {
      cols.push_back("h_sheep" + std::to_string(i) + "_zone" + std::to_string(z));
    }
  }
  for (std::size_t k = 0; k < num_dogs; ++k) {
    cols.push_back("dog" + std::to_string(k) + "_ux");
    cols.push_back("dog" + std::to_string(k) + "_uy");
  }
  return cols;
}

/// One row per tick at round-trip precision. Ticks cut short by an abort are written with the
/// columns they have; missing entries are left empty.
inline void write_csv(std::ostream & os, const EpisodeLog & log, std::size_t num_zones)
{
  if (log.ticks.empty()) {
    return;
  }
  const auto ns = log.ticks.front().sheep.size();
  const auto nd = log.ticks.front().dogs.size();
  const auto header = csv_header(ns, nd, num_zones);
  for (std::size_t c = 0; c < header.size(); ++c) {
    os << (c ? "," : "") << header[c];
  }
  os << '\n';
  for (const auto & t : log.ticks) {
    std::string row = format_double(t.time);
    const auto put = [&](double v) {
      row += ',';
      row += format_double(v);
    };
    for (const auto & s : t.sheep) {
      put(s.x());
      put(s.y());
    }
    for (const auto & d : t.dogs) {
      put(d.x());
      put(d.y());
    }
    for (std::size_t c = 0; c < ns * num_zones; ++c) {
      if (c < t.h.size()) {
        put(t.h[c]);
      } else {
        row += ',';
      }
    }
    for (std::size_t k = 0; k < nd; ++k) {
      if (k < t.dog_velocities.size()) {
        put(t.dog_velocities[k].x());
        put(t.dog_velocities[k].y());
      } else {
        row += ",,";
      }
    }
    os << row << '\n';
  }
}

/// Parsed trajectory CSV: column names and numeric rows (NaN for empty cells).
struct CsvTable
{
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(std::istream & is)
{
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) {
    return table;
  }
  const auto split = [](const std::string & s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) {
      out.push_back(cell);
    }
    if (!s.empty() && s.back() == ',') {
      out.emplace_back();
    }
    return out;
  };
  table.columns = split(line);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    for (const auto & cell : split(line)) {
      if (cell.empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw std::runtime_error(
          "csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.columns.size()) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": wrong column count");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline json feasibility_json(const FeasibilityReport & r)
{
  return {
    {"lambda_s", r.lambda_s}, {"lambda_d", r.lambda_d}, {"lambda_m", r.lambda_m},
    {"f_max", r.f_max},       {"b_lower", r.b_lower},   {"feasible_certificate", r.feasible_certificate}};
}

/// Episode summary. Holds no wall-clock data, so identical runs give identical files.
inline json metrics_json(const EpisodeLog & log)
{
  std::size_t violations = 0;
  for (const auto & t : log.ticks) {
    violations += t.violations.size();
  }
  json j;
  j["scenario"] = log.scenario_name;
  j["breach"] = log.breach;
  j["deadlock"] = log.deadlock;
  j["budget"] = log.budget;
  j["min_h"] = log.min_h;
  j["ticks"] = log.ticks.size();
  j["final_time"] = log.ticks.empty() ? 0.0 : log.ticks.back().time;
  j["infeasible_fallback_ticks"] = log.fallback_ticks;
  j["assumption_violation_ticks"] = log.violation_ticks;
  j["assumption_violations"] = violations;
  j["feasibility"] = feasibility_json(log.feasibility);
  j["aborted"] = log.abort_reason.has_value();
  if (log.abort_reason) {
    j["abort_reason"] = *log.abort_reason;
  }
  return j;
}

/// Overhead plot: zones as shaded discs with the buffer ring dashed, sheep paths blue, dog paths
/// red, start points hollow and end points filled, goal as a cross.
inline void write_svg(std::ostream & os, const EpisodeLog & log, const Scenario & sc)
{
  double x0 = sc.params.goal.x(), x1 = x0, y0 = sc.params.goal.y(), y1 = y0;
  const auto grow = [&](const Vec2 & p, double r) {
    x0 = std::min(x0, p.x() - r);
    x1 = std::max(x1, p.x() + r);
    y0 = std::min(y0, p.y() - r);
    y1 = std::max(y1, p.y() + r);
  };
  for (const auto & z : sc.zones) {
    grow(z.center, z.radius + z.buffer);
  }
  for (const auto & t : log.ticks) {
    for (const auto & s : t.sheep) {
      grow(s, 0.0);
    }
    for (const auto & d : t.dogs) {
      grow(d, 0.0);
    }
  }
  const double pad = 0.1 * std::max({x1 - x0, y1 - y0, 1.0});
  x0 -= pad;
  x1 += pad;
  y0 -= pad;
  y1 += pad;
  const double scale = 600.0 / std::max(x1 - x0, y1 - y0);
  const auto px = [&](double x) { return format_fixed((x - x0) * scale, 2); };
  const auto py = [&](double y) { return format_fixed((y1 - y) * scale, 2); };  // y up
  const auto len = [&](double d) { return format_fixed(d * scale, 2); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << len(x1 - x0) << "\" height=\""
     << len(y1 - y0) << "\" viewBox=\"0 0 " << len(x1 - x0) << ' ' << len(y1 - y0) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto & z : sc.zones) {
    os << "<circle cx=\"" << px(z.center.x()) << "\" cy=\"" << py(z.center.y()) << "\" r=\""
       << len(z.radius) << "\" fill=\"#f4c7c3\" stroke=\"#c0392b\"/>\n";
    os << "<circle cx=\"" << px(z.center.x()) << "\" cy=\"" << py(z.center.y()) << "\" r=\""
       << len(z.radius + z.buffer) << "\" fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\"/>\n";
  }
  const auto path = [&](const auto & pick, std::size_t idx, const char * color) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    // At most ~2000 vertices per path.
    const std::size_t stride = std::max<std::size_t>(1, log.ticks.size() / 2000);
    for (std::size_t t = 0; t < log.ticks.size(); t += stride) {
      const Vec2 & p = pick(log.ticks[t])[idx];
      os << px(p.x()) << ',' << py(p.y()) << ' ';
    }
    const Vec2 & last = pick(log.ticks.back())[idx];
    os << px(last.x()) << ',' << py(last.y()) << "\"/>\n";
    const Vec2 & first = pick(log.ticks.front())[idx];
    os << "<circle cx=\"" << px(first.x()) << "\" cy=\"" << py(first.y())
       << "\" r=\"4\" fill=\"white\" stroke=\"" << color << "\"/>\n";
    os << "<circle cx=\"" << px(last.x()) << "\" cy=\"" << py(last.y()) << "\" r=\"4\" fill=\""
       << color << "\"/>\n";
  };
  if (!log.ticks.empty()) {
    const auto sheep = [](const TickRecord & t) -> const std::vector<Vec2> & { return t.sheep; };
    const auto dogs = [](const TickRecord & t) -> const std::vector<Vec2> & { return t.dogs; };
    for (std::size_t i = 0; i < log.ticks.front().sheep.size(); ++i) {
      path(sheep, i, "#1f5fa8");
    }
    for (std::size_t k = 0; k < log.ticks.front().dogs.size(); ++k) {
      path(dogs, k, "#b03a2e");
    }
  }
  const auto gx = px(sc.params.goal.x());
  const auto gy = py(sc.params.goal.y());
  os << "<text x=\"" << gx << "\" y=\"" << gy
     << "\" font-size=\"16\" text-anchor=\"middle\" dominant-baseline=\"central\">&#215;</text>\n";
  os << "<text x=\"8\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << log.scenario_name
     << (log.breach ? " (breach)" : "") << (log.deadlock ? " (deadlock)" : "") << "</text>\n";
  os << "</svg>\n";
}

}  // namespace herding::io

#endif  // HERDING__IO_HPP_
