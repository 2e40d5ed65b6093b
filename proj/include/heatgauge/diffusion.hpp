#pragma once

// Seeded path samplers for the diffusions generated by (1/2)Delta on R^n and
// H^3 and by (1/2)(Y1^2 + Y2^2) on the Heisenberg group, plus probability
// probes built on them and a binary endpoint cache.
//
// Every Gaussian increment is a pure function of (seed, path, step), so
// batches are bit-identical for any thread count or chunk schedule.

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstdio>
#include <exception>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "heatgauge/errors.hpp"
#include "heatgauge/geometry.hpp"
#include "heatgauge/rng.hpp"

namespace heatgauge {

enum class Scheme : std::uint8_t { exact = 0, euler = 1 };

inline std::string_view to_string(Scheme s) { return s == Scheme::exact ? "exact" : "euler"; }

struct SimConfig {
  double dt = 0.0;                // 0 selects the geometry default
  std::uint64_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::optional<Scheme> scheme;   // empty selects the geometry default
  bool antithetic = false;        // pair path 2j+1 with the negated increments of 2j

  void validate() const {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidInput("SimConfig.dt must be >= 0");
    if (n_paths < 1) throw InvalidInput("SimConfig.n_paths must be >= 1");
  }
};

/// Default step: t/2048 on H^3, t/1024 on the Heisenberg group.
inline double default_dt(const GeometryId& g, double t) {
  switch (g.kind) {
    case GeometryKind::hyperbolic3: return t / 2048.0;
    case GeometryKind::heisenberg: return t / 1024.0;
    case GeometryKind::euclidean: return t;
  }
  return t;
}

inline Scheme resolve_scheme(const GeometryId& g, const SimConfig& cfg) {
  const Scheme s = cfg.scheme.value_or(g.kind == GeometryKind::euclidean ? Scheme::exact : Scheme::euler);
  if (s == Scheme::exact && g.kind != GeometryKind::euclidean)
    throw Unsupported("no exact sampler for " + g.id() + "; use the euler scheme");
  return s;
}

/// Number of steps used to reach t with the requested dt.
inline std::uint64_t step_count(const GeometryId& g, double t, const SimConfig& cfg) {
  if (t == 0.0) return 0;
  if (resolve_scheme(g, cfg) == Scheme::exact) return 1;
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(g, t);
  const double steps = std::round(t / dt);
  if (steps >= 4294967296.0) throw InvalidInput("more than 2^32 steps requested; increase dt");
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(steps));
}

/// Endpoints X_t of n independent paths from a common start.
struct EndpointBatch {
  GeometryId geometry;
  Point start;
  double t = 0.0;
  std::uint64_t seed = 0;
  double dt = 0.0;  // step actually used (t for the exact scheme)
  Scheme scheme = Scheme::exact;
  std::vector<double> coords;  // row-major, geometry.dim() per endpoint

  std::size_t size() const { return coords.size() / static_cast<std::size_t>(geometry.dim()); }
  std::span<const double> operator[](std::size_t i) const {
    const auto d = static_cast<std::size_t>(geometry.dim());
    return {coords.data() + i * d, d};
  }
  friend bool operator==(const EndpointBatch&, const EndpointBatch&) = default;
};

/// Worker count: HEATGAUGE_THREADS if set, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("HEATGAUGE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) over fixed-size chunks on the worker pool.
/// Bodies must write only to slots owned by their index.
template <class Body>
void parallel_for(std::uint64_t n, Body&& body, std::uint64_t chunk = 512) {
  const std::uint64_t chunks = (n + chunk - 1) / chunk;
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(thread_count(), chunks));
  if (workers <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t c = next++; c < chunks; c = next++)
          for (std::uint64_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

/// Number of Brownian coordinates driving one step.
inline int noise_dim(const GeometryId& g) {
  return g.kind == GeometryKind::heisenberg ? 2 : g.kind == GeometryKind::hyperbolic3 ? 3 : g.n;
}

/// Standard normals for (path stream, step) into out[0..d).
inline void standard_normals(std::uint64_t seed, std::uint64_t stream, std::uint64_t step, int d,
                             double* out) {
  CellBits bits(seed, stream, step);
  for (int i = 0; i < d; ++i) out[i] = bits.normal();
}

/// Brownian increments with variance h for a given path and step.
struct Noise {
  std::uint64_t seed;
  bool antithetic;
  int d;

  void operator()(std::uint64_t path, std::uint64_t step, double h, double* out) const {
    const std::uint64_t stream = antithetic ? path / 2 : path;
    standard_normals(seed, stream, step, d, out);
    const double s = std::sqrt(h) * (antithetic && (path & 1u) ? -1.0 : 1.0);
    for (int i = 0; i < d; ++i) out[i] *= s;
  }
};

/// Integration state. H^3 stores log y in slot 2 so that y stays positive.
struct State {
  std::array<double, 16> s{};

  static State from_point(const GeometryId& g, std::span<const double> p) {
    State st;
    std::copy(p.begin(), p.end(), st.s.begin());
    if (g.kind == GeometryKind::hyperbolic3) st.s[2] = std::log(p[2]);
    return st;
  }

  void to_point(const GeometryId& g, double* out) const {
    std::copy(s.begin(), s.begin() + g.dim(), out);
    if (g.kind == GeometryKind::hyperbolic3) out[2] = std::exp(s[2]);
  }

  bool finite(const GeometryId& g) const {
    for (int i = 0; i < g.dim(); ++i)
      if (!std::isfinite(s[static_cast<std::size_t>(i)])) return false;
    return true;
  }
};

/// One step driven by increments dw of variance h.
///   R^n:        X += dB
///   H^3:        x_i += y dB_i,  log y += dB_3 - h  (dy = y dB_3 - y/2 dt)
///   Heisenberg: z += (x dB_2 - y dB_1)/2, x += dB_1, y += dB_2
/// For the Heisenberg frame the midpoint (Stratonovich) and left-point
/// (Ito) rules for z coincide because dB_1 dB_2 cancels.
inline void step(const GeometryId& g, State& st, const double* dw, double h) {
  auto& s = st.s;
  switch (g.kind) {
    case GeometryKind::euclidean:
      for (int i = 0; i < g.n; ++i) s[static_cast<std::size_t>(i)] += dw[i];
      return;
    case GeometryKind::hyperbolic3: {
      const double y = std::exp(s[2]);
      s[0] += y * dw[0];
      s[1] += y * dw[1];
      s[2] += dw[2] - h;
      return;
    }
    case GeometryKind::heisenberg:
      s[2] += 0.5 * (s[0] * dw[1] - s[1] * dw[0]);
      s[0] += dw[0];
      s[1] += dw[1];
      return;
  }
}

inline EndpointBatch empty_batch(const GeometryId& g, const Point& x0, double t, const SimConfig& cfg,
                                 double dt, Scheme scheme) {
  EndpointBatch b;
  b.geometry = g;
  b.start = x0;
  b.t = t;
  b.seed = cfg.seed;
  b.dt = dt;
  b.scheme = scheme;
  b.coords.resize(cfg.n_paths * static_cast<std::uint64_t>(g.dim()));
  return b;
}

}  // namespace detail

/// Endpoints of paths from x0 at each of the (sorted, non-negative) times,
/// taken from the same paths. Times are rounded onto the step grid of the
/// largest time.
inline std::vector<EndpointBatch> simulate_snapshots(const GeometryId& g, const Point& x0,
                                                     std::vector<double> times, const SimConfig& cfg) {
  cfg.validate();
  validate_point(g, x0);
  if (times.empty()) throw InvalidInput("simulate needs at least one time");
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("simulation time must be >= 0");
  std::sort(times.begin(), times.end());
  const double t_max = times.back();
  const Scheme scheme = resolve_scheme(g, cfg);
  const std::uint64_t n_steps = step_count(g, t_max, cfg);
  const double h = n_steps == 0 ? 0.0 : t_max / static_cast<double>(n_steps);
  const int d = g.dim();
  const int nd = detail::noise_dim(g);

  std::vector<std::uint64_t> snap_steps;
  std::vector<EndpointBatch> out;
  for (double t : times) {
    std::uint64_t k = 0;
    double t_used = 0.0;
    if (scheme == Scheme::exact) {
      t_used = t;
    } else if (n_steps > 0) {
      k = static_cast<std::uint64_t>(std::llround(t / h));
      t_used = static_cast<double>(k) * h;
    }
    snap_steps.push_back(k);
    out.push_back(detail::empty_batch(g, x0, t_used, cfg, scheme == Scheme::exact ? t : h, scheme));
  }

  const detail::Noise noise{cfg.seed, cfg.antithetic, nd};
  parallel_for(cfg.n_paths, [&](std::uint64_t path) {
    std::array<double, 16> dw{};
    if (scheme == Scheme::exact) {
      // independent Gaussian increments between consecutive snapshot times
      std::array<double, 16> pos{};
      std::copy(x0.coords().begin(), x0.coords().end(), pos.begin());
      double prev = 0.0;
      for (std::size_t j = 0; j < times.size(); ++j) {
        const double gap = out[j].t - prev;
        prev = out[j].t;
        if (gap > 0.0) {
          noise(path, j, gap, dw.data());
          for (int i = 0; i < d; ++i) pos[static_cast<std::size_t>(i)] += dw[static_cast<std::size_t>(i)];
        }
        std::copy(pos.begin(), pos.begin() + d, out[j].coords.data() + path * static_cast<std::uint64_t>(d));
      }
      return;
    }
    detail::State st = detail::State::from_point(g, x0);
    std::size_t next = 0;
    for (std::uint64_t k = 0; k <= n_steps; ++k) {
      while (next < snap_steps.size() && snap_steps[next] == k) {
        st.to_point(g, out[next].coords.data() + path * static_cast<std::uint64_t>(d));
        ++next;
      }
      if (k == n_steps) break;
      noise(path, k, h, dw.data());
      detail::step(g, st, dw.data(), h);
      if (!st.finite(g))
        throw NumericError("non-finite state in path " + std::to_string(path) + " at step " +
                           std::to_string(k + 1));
    }
  });
  return out;
}

/// Endpoint batch at horizon t.
inline EndpointBatch simulate(const GeometryId& g, const Point& x0, double t, const SimConfig& cfg) {
  return std::move(simulate_snapshots(g, x0, {t}, cfg).front());
}

/// Endpoints at horizon t for step sizes dt, 2 dt, ..., 2^(levels-1) dt,
/// all driven by the same Brownian increments (coarse increments are sums
/// of fine ones). Used for Richardson-type bias estimates.
inline std::vector<EndpointBatch> simulate_coupled(const GeometryId& g, const Point& x0, double t,
                                                   const SimConfig& cfg, int levels) {
  cfg.validate();
  validate_point(g, x0);
  if (levels < 1 || levels > 12) throw InvalidInput("coupled levels must be in [1, 12]");
  if (!(t > 0.0)) throw InvalidInput("coupled simulation needs t > 0");
  SimConfig stepped = cfg;
  if (!stepped.scheme) stepped.scheme = Scheme::euler;
  if (*stepped.scheme == Scheme::exact) stepped.scheme = Scheme::euler;
  const std::uint64_t n_fine = step_count(g, t, stepped);
  const std::uint64_t factor = std::uint64_t{1} << (levels - 1);
  if (n_fine % factor != 0)
    throw InvalidInput("step count " + std::to_string(n_fine) + " not divisible by 2^(levels-1)");
  const double h = t / static_cast<double>(n_fine);
  const int d = g.dim();
  const int nd = detail::noise_dim(g);

  std::vector<EndpointBatch> out;
  for (int l = 0; l < levels; ++l)
    out.push_back(detail::empty_batch(g, x0, t, cfg, h * static_cast<double>(std::uint64_t{1} << l),
                                      Scheme::euler));

  const detail::Noise noise{cfg.seed, cfg.antithetic, nd};
  parallel_for(cfg.n_paths, [&](std::uint64_t path) {
    std::vector<detail::State> st(static_cast<std::size_t>(levels), detail::State::from_point(g, x0));
    std::vector<std::array<double, 16>> acc(static_cast<std::size_t>(levels));
    std::array<double, 16> dw{};
    for (std::uint64_t k = 0; k < n_fine; ++k) {
      noise(path, k, h, dw.data());
      for (int l = 0; l < levels; ++l) {
        auto& a = acc[static_cast<std::size_t>(l)];
        for (int i = 0; i < nd; ++i) a[static_cast<std::size_t>(i)] += dw[static_cast<std::size_t>(i)];
        const std::uint64_t span = std::uint64_t{1} << l;
        if ((k + 1) % span == 0) {
          detail::step(g, st[static_cast<std::size_t>(l)], a.data(), h * static_cast<double>(span));
          a.fill(0.0);
        }
      }
    }
    for (int l = 0; l < levels; ++l) {
      if (!st[static_cast<std::size_t>(l)].finite(g))
        throw NumericError("non-finite state in coupled path " + std::to_string(path));
      st[static_cast<std::size_t>(l)].to_point(
          g, out[static_cast<std::size_t>(l)].coords.data() + path * static_cast<std::uint64_t>(d));
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

struct ProbabilityEstimate {
  double p = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  std::string note;
};

inline ProbabilityEstimate binomial_estimate(std::uint64_t hits, std::uint64_t n, std::string note = {}) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, std::move(note)};
}

/// P_x(d(x, X_s) <= delta).
inline ProbabilityEstimate locality_probe(const GeometryId& g, const Point& x, double delta, double s,
                                          const SimConfig& cfg) {
  if (!(delta > 0.0)) throw InvalidInput("locality probe needs delta > 0");
  if (!(s >= 0.0)) throw InvalidInput("locality probe needs s >= 0");
  if (s == 0.0) return {1.0, 0.0, cfg.n_paths, "degenerate start"};
  const EndpointBatch b = simulate(g, x, s, cfg);
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < b.size(); ++i) hits += distance(g, x, b[i]) <= delta ? 1 : 0;
  return binomial_estimate(hits, b.size());
}

/// P_x(tau_{B(x, r)} <= t) by first-exit detection on the discrete skeleton.
/// Excursions between grid points are missed, so this underestimates.
inline ProbabilityEstimate exit_time_probe(const GeometryId& g, const Point& x, double r, double t,
                                           const SimConfig& cfg) {
  cfg.validate();
  validate_point(g, x);
  if (!(r > 0.0)) throw InvalidInput("exit-time probe needs r > 0");
  if (!(t >= 0.0)) throw InvalidInput("exit-time probe needs t >= 0");
  if (t == 0.0) return {0.0, 0.0, cfg.n_paths, "discrete skeleton; underestimates exits"};
  SimConfig stepped = cfg;
  stepped.scheme = Scheme::euler;
  if (stepped.dt == 0.0) stepped.dt = t / 1024.0;
  const std::uint64_t n_steps = step_count(g, t, stepped);
  const double h = t / static_cast<double>(n_steps);
  const detail::Noise noise{cfg.seed, cfg.antithetic, detail::noise_dim(g)};
  std::vector<unsigned char> exited(cfg.n_paths, 0);
  parallel_for(cfg.n_paths, [&](std::uint64_t path) {
    detail::State st = detail::State::from_point(g, x);
    std::array<double, 16> dw{}, p{};
    for (std::uint64_t k = 0; k < n_steps; ++k) {
      noise(path, k, h, dw.data());
      detail::step(g, st, dw.data(), h);
      st.to_point(g, p.data());
      if (distance(g, x, std::span<const double>(p.data(), static_cast<std::size_t>(g.dim()))) > r) {
        exited[path] = 1;
        return;
      }
    }
  });
  std::uint64_t hits = 0;
  for (auto e : exited) hits += e;
  return binomial_estimate(hits, cfg.n_paths, "discrete skeleton, dt=" + std::to_string(h) +
                                                  "; underestimates exits");
}

// ---------------------------------------------------------------------------
// Endpoint cache
// ---------------------------------------------------------------------------
//
// Layout (little-endian):
//   "HGEB" | u16 version | u16 len + geometry id | u16 dim + f64 start[dim]
//   | f64 t | u64 n | u64 seed | f64 dt | u8 scheme | f64 coords[n * dim]

inline constexpr std::uint16_t kBatchFormatVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "cache I/O assumes a little-endian host");

template <class T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T take(std::string_view& buf) {
  if (buf.size() < sizeof(T)) throw InvalidInput("truncated endpoint cache");
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  buf.remove_prefix(sizeof(T));
  return v;
}

}  // namespace detail

/// Serialized header; the cache key hashes exactly these bytes.
inline std::string batch_header(const EndpointBatch& b) {
  std::string h = "HGEB";
  detail::put<std::uint16_t>(h, kBatchFormatVersion);
  const std::string id = b.geometry.id();
  detail::put<std::uint16_t>(h, static_cast<std::uint16_t>(id.size()));
  h += id;
  detail::put<std::uint16_t>(h, static_cast<std::uint16_t>(b.start.size()));
  for (double v : b.start.coords()) detail::put<double>(h, v);
  detail::put<double>(h, b.t);
  detail::put<std::uint64_t>(h, b.size());
  detail::put<std::uint64_t>(h, b.seed);
  detail::put<double>(h, b.dt);
  detail::put<std::uint8_t>(h, static_cast<std::uint8_t>(b.scheme));
  return h;
}

/// FNV-1a 64 of the header, as 16 hex digits.
inline std::string cache_key(const EndpointBatch& b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : batch_header(b)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline std::string serialize(const EndpointBatch& b) {
  std::string buf = batch_header(b);
  buf.reserve(buf.size() + b.coords.size() * sizeof(double));
  for (double v : b.coords) detail::put<double>(buf, v);
  return buf;
}

inline EndpointBatch deserialize(std::string_view buf) {
  if (buf.substr(0, 4) != "HGEB") throw InvalidInput("not an endpoint cache (bad magic)");
  buf.remove_prefix(4);
  if (detail::take<std::uint16_t>(buf) != kBatchFormatVersion)
    throw InvalidInput("unsupported endpoint cache version");
  EndpointBatch b;
  const auto id_len = detail::take<std::uint16_t>(buf);
  if (buf.size() < id_len) throw InvalidInput("truncated endpoint cache");
  b.geometry = GeometryId::parse(buf.substr(0, id_len));
  buf.remove_prefix(id_len);
  const auto dim = detail::take<std::uint16_t>(buf);
  std::vector<double> start(dim);
  for (auto& v : start) v = detail::take<double>(buf);
  b.start = Point(std::move(start));
  b.t = detail::take<double>(buf);
  const auto n = detail::take<std::uint64_t>(buf);
  b.seed = detail::take<std::uint64_t>(buf);
  b.dt = detail::take<double>(buf);
  const auto scheme = detail::take<std::uint8_t>(buf);
  if (scheme > 1) throw InvalidInput("bad scheme tag in endpoint cache");
  b.scheme = static_cast<Scheme>(scheme);
  const std::uint64_t count = n * static_cast<std::uint64_t>(b.geometry.dim());
  if (buf.size() != count * sizeof(double)) throw InvalidInput("endpoint cache payload size mismatch");
  b.coords.resize(count);
  std::memcpy(b.coords.data(), buf.data(), buf.size());
  return b;
}

inline void save_batch(const std::filesystem::path& file, const EndpointBatch& b) {
  std::ofstream os(file, std::ios::binary);
  const std::string buf = serialize(b);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error("cannot write endpoint cache " + file.string());
}

inline EndpointBatch load_batch(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot read endpoint cache " + file.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize(ss.str());
}

/// simulate() backed by a directory of cache files keyed by header hash.
inline EndpointBatch simulate_cached(const std::filesystem::path& dir, const GeometryId& g,
                                     const Point& x0, double t, const SimConfig& cfg) {
  EndpointBatch probe;
  probe.geometry = g;
  probe.start = x0;
  probe.t = t;
  probe.seed = cfg.seed;
  probe.scheme = resolve_scheme(g, cfg);
  const std::uint64_t steps = step_count(g, t, cfg);
  probe.dt = probe.scheme == Scheme::exact || steps == 0 ? t : t / static_cast<double>(steps);
  probe.coords.resize(cfg.n_paths * static_cast<std::uint64_t>(g.dim()));
  const auto file = dir / ("batch-" + cache_key(probe) + ".hgeb");
  if (!cfg.antithetic && std::filesystem::exists(file)) {
    EndpointBatch cached = load_batch(file);
    if (batch_header(cached) == batch_header(probe)) return cached;
  }
  EndpointBatch fresh = simulate(g, x0, t, cfg);
  if (!cfg.antithetic) {
    std::filesystem::create_directories(dir);
    save_batch(file, fresh);
  }
  return fresh;
}

}  // namespace heatgauge
