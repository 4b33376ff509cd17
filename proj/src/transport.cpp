#include "phonon/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "phonon/errors.hpp"

namespace phonon {

namespace {

template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  if (jobs <= 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  pool.reserve(parts - 1);
  for (std::size_t p = 1; p < parts; ++p)
    pool.emplace_back([&, p] { fn(n * p / parts, n * (p + 1) / parts); });
  fn(0, n / parts);
  for (auto& t : pool) t.join();
}

// Face-inflow deviations of one ordinate, indexed by step, in a ring of
// power-of-two size. Nothing is stored before the first nonzero value.
struct History {
  std::vector<double> buf;
  std::size_t mask = 0;
  long first = -1;

  void init(std::size_t min_cap) {
    std::size_t cap = 1;
    while (cap < min_cap) cap <<= 1;
    buf.assign(cap, 0.0);
    mask = cap - 1;
    first = -1;
  }
  void push(long step, double value) {
    if (first < 0) {
      if (value == 0.0) return;
      first = step;
    }
    buf[static_cast<std::size_t>(step) & mask] = value;
  }
  // Linear interpolation at a fractional step (zero before the first entry).
  double at(double q) const {
    if (first < 0) return 0.0;
    long qi = static_cast<long>(q);
    if (static_cast<double>(qi) > q) --qi;
    if (qi + 1 < first) return 0.0;
    double fr = q - static_cast<double>(qi);
    double v0 = buf[static_cast<std::size_t>(qi) & mask];
    double v1 = buf[static_cast<std::size_t>(qi + 1) & mask];
    return v0 + fr * (v1 - v0);
  }
};

struct Layer {
  int n = 0;
  double dx = 0.0;
  bool has_source = false;
  bool u_zero = false;  // grid part identically zero (tracking, no source, zero start)

  // Per row (ordinate) constants.
  std::vector<double> courant, decay, source_gain, xi, weight_h, row_tau;
  std::vector<int> dir;

  std::vector<double> u;          // rows * (n + 2), upwind order
  std::vector<double> in_next;    // grid-part inflow at the new time
  std::vector<double> exit_u;     // grid-part exit value at the current time
  std::vector<double> exit_total; // total exit value at the current time
  std::vector<double> h, h_rev, h_prev, h_prev_rev;  // <f>/2 per cell
  std::vector<double> h_part;                        // per-chunk partial sums

  // Tracking.
  std::vector<double> b_ref;
  std::vector<History> hist;
  std::vector<double> atten0;     // e^{-dx / (2 c tau)}
  std::vector<double> atten_step; // e^{-dx / (c tau)}
  std::vector<double> inv_courant;
  std::vector<double> atten_exit; // e^{-width / (c tau)}

  std::size_t rows() const { return courant.size(); }
  std::size_t stride() const { return static_cast<std::size_t>(n) + 2; }
  double* row(std::size_t r) { return u.data() + r * stride(); }
  const double* row(std::size_t r) const { return u.data() + r * stride(); }
};

// Linear interpolation of an extended row at p cells from the entry face.
inline double sample_row(const double* u, int n, double p) {
  if (p <= 0.5) return u[0] + (u[1] - u[0]) * (p / 0.5);
  if (p >= n - 0.5) return u[n] + (u[n + 1] - u[n]) * ((p - (n - 0.5)) / 0.5);
  double x = p - 0.5;
  double fl = std::floor(x);
  int m = static_cast<int>(fl);
  double th = x - fl;
  return u[m + 1] + th * (u[m + 2] - u[m + 1]);
}

// Linear interpolation of centre values hs (entry-to-exit order) at p cells
// from the entry face, constant beyond the outermost centres.
inline double sample_centres(const double* hs, int n, double p) {
  double x = p - 0.5;
  if (x <= 0.0) return hs[0];
  if (x >= n - 1) return hs[n - 1];
  double fl = std::floor(x);
  int m = static_cast<int>(fl);
  double th = x - fl;
  return hs[m] + th * (hs[m + 1] - hs[m]);
}

}  // namespace

struct TransportSolver::Impl {
  MaterialModel m;
  AngularQuadrature q;
  InterfaceCoefficients c;
  SolverOptions o;
  SystemKind kind;
  std::shared_ptr<const IncomingData> phi;
  const TransportSolver* full = nullptr;
  double eq_m0 = -1.0;  // < 0: zero initial data
  double lp_exponent = 2.0;

  std::size_t nmu = 0, nw = 0, half = 0;
  Layer left, right;
  bool started = false;
  long n = 0;  // step index of the current time
  InputTotals totals;
  double phi_l1_prev = 0.0, phi_flux_prev = 0.0, phi_lp_prev = 0.0;
  double flux_right = 0.0;

  double t_of(long s) const { return static_cast<double>(s) * o.dt; }
  bool tracking() const { return o.advection == Advection::kTracking; }

  void init_layer(Layer& L, int cells, double width, bool source) {
    L.n = cells;
    L.dx = width / cells;
    L.has_source = source;
    const std::size_t R = nmu * nw;
    L.courant.resize(R);
    L.decay.resize(R);
    L.source_gain.resize(R);
    L.xi.resize(R);
    L.weight_h.resize(R);
    L.row_tau.resize(R);
    L.dir.resize(R);
    L.atten_exit.resize(R);
    for (std::size_t j = 0; j < nmu; ++j)
      for (std::size_t k = 0; k < nw; ++k) {
        std::size_t r = j * nw + k;
        double speed = std::abs(q.nodes[j]) * m.v[k];
        L.courant[r] = speed * o.dt / L.dx;
        L.decay[r] = std::exp(-o.dt / m.tau[k]);
        L.source_gain[r] = source ? (1.0 - L.decay[r]) * m.xi[k] : 0.0;
        L.xi[r] = m.xi[k];
        L.weight_h[r] = 0.5 * q.weights[j] * m.grid.weights[k] / m.tau[k];
        L.row_tau[r] = m.tau[k];
        L.dir[r] = q.nodes[j] > 0.0 ? 1 : -1;
        L.atten_exit[r] = std::exp(-width / (speed * m.tau[k]));
        if (!(L.courant[r] < cells))
          throw ConfigError("time step too large: a characteristic crosses a whole layer in one step "
                            "(need v0 dt < min(1, L-1))");
      }
    L.u.assign(R * L.stride(), 0.0);
    L.in_next.assign(R, 0.0);
    L.exit_u.assign(R, 0.0);
    L.exit_total.assign(R, 0.0);
    L.h.assign(cells, 0.0);
    L.h_rev.assign(cells, 0.0);
    L.h_prev.assign(cells, 0.0);
    L.h_prev_rev.assign(cells, 0.0);
    if (tracking()) {
      L.b_ref.assign(R, 0.0);
      L.hist.resize(R);
      L.atten0.resize(R);
      L.atten_step.resize(R);
      L.inv_courant.resize(R);
      for (std::size_t r = 0; r < R; ++r) {
        double lag_exit = cells / L.courant[r];
        if (o.horizon_steps > 0) lag_exit = std::min(lag_exit, static_cast<double>(o.horizon_steps));
        L.hist[r].init(static_cast<std::size_t>(std::ceil(lag_exit)) + 4);
        double speed = L.courant[r] * L.dx / o.dt;
        L.atten0[r] = std::exp(-0.5 * L.dx / (speed * L.row_tau[r]));
        L.atten_step[r] = std::exp(-L.dx / (speed * L.row_tau[r]));
        L.inv_courant[r] = 1.0 / L.courant[r];
      }
    }
  }

  // Inflow-deviation part at cell i of row r, at step s.
  double b_cell(const Layer& L, std::size_t r, int i, long s) const {
    const History& hst = L.hist[r];
    if (hst.first < 0) return 0.0;
    double a = L.atten0[r] * std::pow(L.atten_step[r], i);
    return a * hst.at(static_cast<double>(s) - (i + 0.5) * L.inv_courant[r]);
  }

  // Adds w * (grid part + tracked part) of row r at step s into hp (x order).
  void accumulate_row(const Layer& L, std::size_t r, long s, double* hp) const {
    const int cells = L.n;
    const double w = L.weight_h[r];
    const double* uc = L.row(r) + 1;
    const bool pos = L.dir[r] > 0;
    if (!L.u_zero) {
      if (pos)
        for (int i = 0; i < cells; ++i) hp[i] += w * uc[i];
      else
        for (int i = 0; i < cells; ++i) hp[cells - 1 - i] += w * uc[i];
    }
    if (!tracking() || L.hist[r].first < 0) return;
    const History& H = L.hist[r];
    // Cells reached by the tracked inflow so far.
    double reach = (static_cast<double>(s - H.first) + 1.0) * L.courant[r];
    int imax = static_cast<int>(std::min<double>(cells, std::ceil(reach + 0.5)));
    const double inv = L.inv_courant[r], rho = L.atten_step[r];
    const double* buf = H.buf.data();
    const std::size_t mask = H.mask;
    const long first = H.first;
    const double sd = static_cast<double>(s);
    double a = w * L.atten0[r];
    for (int i = 0; i < imax; ++i, a *= rho) {
      double qf = sd - (i + 0.5) * inv;
      long qi = static_cast<long>(qf);
      if (static_cast<double>(qi) > qf) --qi;
      if (qi + 1 < first) break;
      double fr = qf - static_cast<double>(qi);
      double v0 = buf[static_cast<std::size_t>(qi) & mask];
      double v1 = buf[static_cast<std::size_t>(qi + 1) & mask];
      hp[pos ? i : cells - 1 - i] += a * (v0 + fr * (v1 - v0));
    }
  }

  double b_exit(const Layer& L, std::size_t r, long s) const {
    const History& hst = L.hist[r];
    if (hst.first < 0) return 0.0;
    return L.atten_exit[r] * hst.at(static_cast<double>(s) - L.n * L.inv_courant[r]);
  }

  // Exact cell averages (upwind order) of the tracked part of row r at step s.
  // The history is linear between steps, so every piece between a cell edge
  // and a history node is integrated by two-point Gauss.
  void tracked_averages(const Layer& L, std::size_t r, long s, std::vector<double>& out) const {
    out.assign(L.n, 0.0);
    const History& H = L.hist[r];
    if (!tracking() || H.first < 0) return;
    const double c = L.courant[r], rho = L.atten_step[r];
    const double sd = static_cast<double>(s);
    const double y_end = std::min<double>(L.n, (sd - H.first + 1.0) * c);
    const double g = 0.5 / std::sqrt(3.0);
    auto value = [&](double y) { return std::pow(rho, y) * H.at(sd - y / c); };
    double y = 0.0;
    long m = s;  // next history node at y = c (s - m)
    while (y < y_end) {
      while (c * (sd - static_cast<double>(m)) <= y) --m;
      int cell = static_cast<int>(y);
      double yb = std::min({static_cast<double>(cell + 1), c * (sd - static_cast<double>(m)), y_end});
      double mid = 0.5 * (y + yb), half = yb - y;
      out[cell] += 0.5 * half * (value(mid - g * half) + value(mid + g * half));
      y = yb;
    }
  }

  // Cell value (grid part plus tracked part) at the current step.
  double cell_value(const Layer& L, std::size_t r, int i) const {
    double v = L.row(r)[i + 1];
    if (tracking()) v += b_cell(L, r, i, n);
    return v;
  }

  // Exit values at step s (= n + 1) from the state at n using source hs.
  void compute_exit(Layer& L, long s, const std::vector<double>* hf,
                    const std::vector<double>* hr) {
    parallel_for(L.rows(), o.jobs, [&](std::size_t r0, std::size_t r1) {
      for (std::size_t r = r0; r < r1; ++r) {
        double eu = 0.0;
        if (!L.u_zero) {
          const double C = L.courant[r];
          eu = L.decay[r] * sample_row(L.row(r), L.n, L.n - C);
          if (L.source_gain[r] != 0.0) {
            const double* hs = (L.dir[r] > 0 ? hf : hr)->data();
            eu += L.source_gain[r] * sample_centres(hs, L.n, L.n - 0.5 * C);
          }
        }
        L.exit_u[r] = eu;
        L.exit_total[r] = eu + (tracking() ? b_exit(L, r, s) : 0.0);
      }
    });
  }

  // Stores the total inflow at step s for every row.
  void set_inflow(Layer& L, long s, const std::vector<double>& inflow) {
    for (std::size_t r = 0; r < L.rows(); ++r) {
      if (tracking()) {
        if (s == 0) L.b_ref[r] = inflow[r];
        L.in_next[r] = L.b_ref[r];
        L.hist[r].push(s, inflow[r] - L.b_ref[r]);
      } else {
        L.in_next[r] = inflow[r];
      }
    }
  }

  // Fixed row partition for the bracket sums, independent of the job count.
  static constexpr std::size_t kChunks = 8;

  // Sums the per-chunk partial brackets into h (x order) and its reverse.
  void reduce_bracket(Layer& L) {
    const int cells = L.n;
    std::fill(L.h.begin(), L.h.end(), 0.0);
    for (std::size_t c = 0; c < kChunks; ++c)
      for (int x = 0; x < cells; ++x) L.h[x] += L.h_part[c * cells + x];
    for (int x = 0; x < cells; ++x) L.h_rev[cells - 1 - x] = L.h[x];
  }

  void advance_row(Layer& L, std::size_t r, const std::vector<double>* hf,
                   const std::vector<double>* hr, std::vector<double>& next) const {
    const int cells = L.n;
    double* u = L.row(r);
    const double C = L.courant[r];
    const double E = L.decay[r];
    const double S = L.source_gain[r];
    const double* hs = S != 0.0 ? (L.dir[r] > 0 ? hf : hr)->data() : nullptr;
    const double in_old = u[0], in_new = L.in_next[r];
    const double tau = L.row_tau[r];
    const int K = static_cast<int>(std::floor(C));
    const int i0 = std::min(cells, K + 1);
    // Cells whose characteristic foot reaches back to the entry face or
    // into the first half cell.
    for (int i = 0; i < i0; ++i) {
      double p = i + 0.5;
      double foot = p - C;
      double val;
      if (foot >= 0.0) {
        val = E * sample_row(u, cells, foot);
        if (S != 0.0) val += S * sample_centres(hs, cells, p - 0.5 * C);
      } else {
        double th = p / C;  // fraction of dt since crossing the face
        double face = (1.0 - th) * in_new + th * in_old;
        double Ep = std::exp(-th * o.dt / tau);
        val = Ep * face;
        if (S != 0.0) val += (1.0 - Ep) * L.xi[r] * sample_centres(hs, cells, 0.5 * p);
      }
      next[i] = val;
    }
    // Constant interpolation weights for the remaining cells.
    const double thC = C - K;
    const double* uc = u + 1;
    if (S != 0.0) {
      const int K2 = static_cast<int>(std::floor(0.5 * C));
      const double th2 = 0.5 * C - K2;
      for (int i = i0; i < cells; ++i) {
        double adv = thC * uc[i - K - 1] + (1.0 - thC) * uc[i - K];
        double src = th2 * hs[i - K2 - 1] + (1.0 - th2) * hs[i - K2];
        next[i] = E * adv + S * src;
      }
    } else {
      for (int i = i0; i < cells; ++i)
        next[i] = E * (thC * uc[i - K - 1] + (1.0 - thC) * uc[i - K]);
    }
    std::copy(next.begin(), next.end(), u + 1);
    u[0] = in_new;
    u[cells + 1] = L.exit_u[r];
  }

  // Advances the grid part of every row by one step; with `accumulate`,
  // also forms the bracket at the new step s.
  void advance_interior(Layer& L, const std::vector<double>* hf, const std::vector<double>* hr,
                        long s, bool accumulate) {
    if (L.u_zero && !accumulate) return;
    const int cells = L.n;
    const std::size_t R = L.rows();
    if (accumulate) L.h_part.assign(kChunks * cells, 0.0);
    parallel_for(kChunks, o.jobs, [&](std::size_t c0, std::size_t c1) {
      std::vector<double> next(cells);
      for (std::size_t ch = c0; ch < c1; ++ch) {
        double* hp = accumulate ? L.h_part.data() + ch * cells : nullptr;
        for (std::size_t r = R * ch / kChunks; r < R * (ch + 1) / kChunks; ++r) {
          if (!L.u_zero) advance_row(L, r, hf, hr, next);
          if (hp) accumulate_row(L, r, s, hp);
        }
      }
    });
    if (accumulate) {
      // hf / hr may alias h: swap only once the sweep is done.
      std::swap(L.h, L.h_prev);
      std::swap(L.h_rev, L.h_prev_rev);
      reduce_bracket(L);
    }
  }

  // h = <f>/2 at step s for every cell of L, without advancing.
  void compute_bracket(Layer& L, long s) {
    std::swap(L.h, L.h_prev);
    std::swap(L.h_rev, L.h_prev_rev);
    const int cells = L.n;
    const std::size_t R = L.rows();
    L.h_part.assign(kChunks * cells, 0.0);
    for (std::size_t ch = 0; ch < kChunks; ++ch)
      for (std::size_t r = R * ch / kChunks; r < R * (ch + 1) / kChunks; ++r)
        accumulate_row(L, r, s, L.h_part.data() + ch * cells);
    reduce_bracket(L);
  }

  void accumulate_input(const std::vector<double>& phi_pos, bool first) {
    double s1 = 0.0, sf = 0.0, sp = 0.0;
    for (std::size_t j = half; j < nmu; ++j)
      for (std::size_t k = 0; k < nw; ++k) {
        double v = std::abs(phi_pos[(j - half) * nw + k]);
        if (v == 0.0) continue;
        double w = q.weights[j] * m.grid.weights[k];
        s1 += w * v;
        sf += w * q.nodes[j] * m.v[k] * v;
        if (m.xi[k] > 0.0) sp += w * std::pow(v, lp_exponent) * std::pow(m.xi[k], 1.0 - lp_exponent);
        else sp = std::numeric_limits<double>::infinity();
      }
    if (!first) {
      totals.l1 += 0.5 * o.dt * (phi_l1_prev + s1);
      totals.flux += 0.5 * o.dt * (phi_flux_prev + sf);
      totals.lp += 0.5 * o.dt * (phi_lp_prev + sp);
    }
    phi_l1_prev = s1;
    phi_flux_prev = sf;
    phi_lp_prev = sp;
  }

  // Boundary and interface conditions at step s using current exit values.
  void apply_conditions(long s) {
    const double t = t_of(s);
    const std::size_t R = nmu * nw;
    std::vector<double> in_left(R, 0.0);
    // x = 0, mu > 0.
    if (kind != SystemKind::kRemainder) {
      std::vector<double> phi_pos = apply_boundary_left(t, *phi, m, q);
      for (std::size_t j = half; j < nmu; ++j)
        for (std::size_t k = 0; k < nw; ++k) in_left[j * nw + k] = phi_pos[(j - half) * nw + k];
      accumulate_input(phi_pos, s == 0);
    }
    // x = 1, mu < 0 into the left layer.
    const Layer* g_src = nullptr;
    if (kind == SystemKind::kFull) g_src = &right;
    if (kind == SystemKind::kRemainder) g_src = &full->impl_->right;
    for (std::size_t j = 0; j < half; ++j) {
      std::size_t jm = q.mirror(j);
      for (std::size_t k = 0; k < nw; ++k) {
        double v = c.eta1[k] * left.exit_total[jm * nw + k];
        if (g_src) v += c.zeta1[k] * g_src->exit_total[j * nw + k];
        in_left[j * nw + k] = v;
      }
    }
    if (kind == SystemKind::kFull) {
      std::vector<double> in_right(R, 0.0);
      for (std::size_t j = half; j < nmu; ++j) {
        std::size_t jm = q.mirror(j);
        for (std::size_t k = 0; k < nw; ++k)
          in_right[j * nw + k] =
              c.eta2[k] * left.exit_total[j * nw + k] + c.zeta2[k] * right.exit_total[jm * nw + k];
      }
      std::vector<double> g_pos((nmu - half) * nw);
      for (std::size_t j = half; j < nmu; ++j)
        for (std::size_t k = 0; k < nw; ++k) g_pos[(j - half) * nw + k] = right.exit_total[j * nw + k];
      std::vector<double> g_back = apply_boundary_right(g_pos, c, m, q);
      for (std::size_t j = 0; j < half; ++j)
        for (std::size_t k = 0; k < nw; ++k) in_right[j * nw + k] = g_back[j * nw + k];
      flux_right = half_range_flux_pos(g_pos);
      set_inflow(right, s, in_right);
    }
    set_inflow(left, s, in_left);
  }

  double half_range_flux_pos(const std::vector<double>& g_pos) const {
    double s = 0.0;
    for (std::size_t j = half; j < nmu; ++j) {
      double inner = 0.0;
      for (std::size_t k = 0; k < nw; ++k) inner += m.grid.weights[k] * m.v[k] * g_pos[(j - half) * nw + k];
      s += q.weights[j] * q.nodes[j] * inner;
    }
    return s;
  }

  void start() {
    if (started) return;
    if (kind != SystemKind::kRemainder && !phi)
      throw ConfigError("transport: incoming data not set");
    if (kind == SystemKind::kRemainder && !full)
      throw ConfigError("transport: remainder system needs a linked full solver");
    if (eq_m0 >= 0.0) {
      if (kind != SystemKind::kFull)
        throw ConfigError("transport: equilibrium start only for the full system");
      fill_equilibrium(left, eq_m0);
      fill_equilibrium(right, c.gamma0 * eq_m0);
    }
    for (Layer* L : {&left, &right}) {
      if (L->n == 0) continue;
      for (std::size_t r = 0; r < L->rows(); ++r) {
        L->exit_u[r] = L->row(r)[L->n + 1];
        L->exit_total[r] = L->exit_u[r];
      }
    }
    apply_conditions(0);
    for (Layer* L : {&left, &right}) {
      if (L->n == 0) continue;
      for (std::size_t r = 0; r < L->rows(); ++r) L->row(r)[0] = L->in_next[r];
      if (tracking() && !L->has_source && eq_m0 < 0.0)
        L->u_zero = std::all_of(L->b_ref.begin(), L->b_ref.end(), [](double b) { return b == 0.0; });
      if (L->has_source && kind == SystemKind::kFull) {
        compute_bracket(*L, 0);
      }
    }
    started = true;
    check_finite(0);
  }

  void fill_equilibrium(Layer& L, double scale) {
    for (std::size_t r = 0; r < L.rows(); ++r) {
      double* u = L.row(r);
      std::fill(u, u + L.stride(), scale * L.xi[r]);
    }
  }

  void check_finite(long s) const {
    for (const Layer* L : {&left, &right}) {
      if (L->n == 0) continue;
      for (double v : L->exit_total)
        if (!std::isfinite(v))
          throw NumericalError("non-finite value in the transport state at step " + std::to_string(s), s);
      for (double v : L->h)
        if (!std::isfinite(v))
          throw NumericalError("non-finite value in the transport state at step " + std::to_string(s), s);
    }
  }

  void step() {
    if (!started) start();
    const long s = n + 1;
    if (o.horizon_steps > 0 && s > o.horizon_steps)
      throw ConfigError("transport: stepped past the configured horizon of " +
                        std::to_string(o.horizon_steps) + " steps");
    if (kind == SystemKind::kRemainder && full->impl_->n != s)
      throw ConfigError("transport: remainder stepped out of lockstep with its full system");
    const Layer& src_layer = kind == SystemKind::kRemainder ? full->impl_->left : left;
    // The source used for this step is h at step n. After a linked full
    // solver has stepped, its h at step n sits in h_prev.
    const std::vector<double>* hf = kind == SystemKind::kRemainder ? &src_layer.h_prev : &left.h;
    const std::vector<double>* hr = kind == SystemKind::kRemainder ? &src_layer.h_prev_rev : &left.h_rev;
    compute_exit(left, s, hf, hr);
    if (kind == SystemKind::kFull) compute_exit(right, s, &right.h, &right.h_rev);
    apply_conditions(s);
    const bool acc = kind == SystemKind::kFull;
    advance_interior(left, hf, hr, s, acc);
    if (acc) advance_interior(right, &right.h, &right.h_rev, s, true);
    n = s;
    check_finite(s);
  }
};

TransportSolver::TransportSolver(const MaterialModel& m, const AngularQuadrature& q,
                                 const InterfaceCoefficients& c, const SolverOptions& o,
                                 SystemKind kind)
    : impl_(std::make_unique<Impl>()) {
  check_angular(q);
  if (c.eta1.size() != m.size())
    throw ConfigError("transport: coefficient tables do not match the spectral grid");
  if (!(o.dt > 0.0)) throw ConfigError("transport: dt must be positive");
  if (o.grid.nx_left < 1 || o.grid.nx_right < 1) throw ConfigError("transport: need at least one cell per layer");
  if (!(o.grid.L > 1.0)) throw ConfigError("transport: L must exceed 1");
  if (o.dt > m.tau0) throw ConfigError("transport: dt must not exceed tau0");
  Impl& I = *impl_;
  I.m = m;
  I.q = q;
  I.c = c;
  I.o = o;
  I.kind = kind;
  I.nmu = q.size();
  I.nw = m.size();
  I.half = q.half();
  I.init_layer(I.left, o.grid.nx_left, 1.0, kind != SystemKind::kBallistic);
  if (kind == SystemKind::kFull) I.init_layer(I.right, o.grid.nx_right, o.grid.L - 1.0, true);
}

TransportSolver::~TransportSolver() = default;
TransportSolver::TransportSolver(TransportSolver&&) noexcept = default;
TransportSolver& TransportSolver::operator=(TransportSolver&&) noexcept = default;

void TransportSolver::set_incoming(std::shared_ptr<const IncomingData> phi) {
  if (impl_->started) throw ConfigError("transport: incoming data must be set before start");
  impl_->phi = std::move(phi);
}

void TransportSolver::link(const TransportSolver* full) {
  if (impl_->kind != SystemKind::kRemainder) throw ConfigError("transport: only remainder systems link");
  if (!full || full->impl_->kind != SystemKind::kFull)
    throw ConfigError("transport: remainder must link to a full system");
  if (full->impl_->nmu != impl_->nmu || full->impl_->nw != impl_->nw ||
      full->impl_->o.grid.nx_left != impl_->o.grid.nx_left || full->impl_->o.dt != impl_->o.dt ||
      full->impl_->o.advection != impl_->o.advection)
    throw ConfigError("transport: remainder discretization differs from its full system");
  impl_->full = full;
}

void TransportSolver::set_initial_equilibrium(double m0) {
  if (impl_->started) throw ConfigError("transport: initial data must be set before start");
  if (!(m0 >= 0.0)) throw ConfigError("transport: equilibrium scale must be nonnegative");
  impl_->eq_m0 = m0;
}

void TransportSolver::set_lp_exponent(double p) {
  if (!(p > 1.0)) throw ConfigError("transport: L^p exponent must exceed 1");
  impl_->lp_exponent = p;
}

void TransportSolver::start() { impl_->start(); }
void TransportSolver::step() { impl_->step(); }
double TransportSolver::time() const { return impl_->t_of(impl_->n); }
long TransportSolver::step_index() const { return impl_->n; }
SystemKind TransportSolver::kind() const { return impl_->kind; }
const MaterialModel& TransportSolver::material() const { return impl_->m; }
const AngularQuadrature& TransportSolver::angular() const { return impl_->q; }
const SolverOptions& TransportSolver::options() const { return impl_->o; }
const InterfaceCoefficients& TransportSolver::coefficients() const { return impl_->c; }
const InputTotals& TransportSolver::input_totals() const { return impl_->totals; }

PhononState TransportSolver::state() const {
  const Impl& I = *impl_;
  PhononState st;
  st.t = time();
  st.n_mu = I.nmu;
  st.n_omega = I.nw;
  auto fill = [&](const Layer& L, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(L.n) * I.nmu * I.nw, 0.0);
    for (std::size_t r = 0; r < L.rows(); ++r)
      for (int i = 0; i < L.n; ++i) {
        int x = L.dir[r] > 0 ? i : L.n - 1 - i;
        out[static_cast<std::size_t>(x) * L.rows() + r] = I.cell_value(L, r, i);
      }
  };
  st.nx_left = I.left.n;
  fill(I.left, st.f);
  if (I.kind == SystemKind::kFull) {
    st.nx_right = I.right.n;
    fill(I.right, st.g);
  }
  return st;
}

StateNorms TransportSolver::norms(double p) const {
  const Impl& I = *impl_;
  StateNorms s;
  s.min_value = std::numeric_limits<double>::infinity();
  // Integral norms use cell averages, the extrema use cell-centre values.
  std::vector<double> avg;
  auto visit = [&](const Layer& L, double& l1, double& lp, double& max_ratio) {
    for (std::size_t r = 0; r < L.rows(); ++r) {
      std::size_t j = r / I.nw, k = r % I.nw;
      double w = I.q.weights[j] * I.m.grid.weights[k] * L.dx;
      double xi = I.m.xi[k];
      double xi_pow = xi > 0.0 ? std::pow(xi, 1.0 - p) : 0.0;
      I.tracked_averages(L, r, I.n, avg);
      const double* u = L.row(r) + 1;
      for (int i = 0; i < L.n; ++i) {
        double a = u[i] + avg[i];
        l1 += w * std::abs(a);
        if (a != 0.0) lp += w * std::pow(std::abs(a), p) * (xi > 0.0 ? xi_pow : std::numeric_limits<double>::infinity());
        double v = I.cell_value(L, r, i);
        s.min_value = std::min(s.min_value, v);
        if (xi > 0.0) max_ratio = std::max(max_ratio, v / xi);
        else if (v > 0.0) max_ratio = std::numeric_limits<double>::infinity();
      }
    }
  };
  visit(I.left, s.l1_f, s.lp_f, s.max_f_over_xi);
  if (I.kind == SystemKind::kFull) visit(I.right, s.l1_g, s.lp_g, s.max_g_over_xi);
  return s;
}

std::vector<double> TransportSolver::outgoing_left() const {
  const Impl& I = *impl_;
  return std::vector<double>(I.left.exit_total.begin(), I.left.exit_total.begin() + I.half * I.nw);
}

std::vector<double> TransportSolver::interface_left() const {
  const Impl& I = *impl_;
  return std::vector<double>(I.left.exit_total.begin() + I.half * I.nw, I.left.exit_total.end());
}

std::vector<double> TransportSolver::interface_right() const {
  const Impl& I = *impl_;
  if (I.kind != SystemKind::kFull) throw ConfigError("transport: no right layer in this system");
  return std::vector<double>(I.right.exit_total.begin(), I.right.exit_total.begin() + I.half * I.nw);
}

double TransportSolver::right_flux() const { return impl_->flux_right; }

const std::vector<double>& TransportSolver::source_left() const { return impl_->left.h; }

double BoundaryTrace::integrated(std::size_t n) const {
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    double inner = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k) inner += omega_weights[k] * at(n, j, k);
    s += mu_weights[j] * inner;
  }
  return s;
}

double bracket(const double* slice, const MaterialModel& m, const AngularQuadrature& q) {
  const std::size_t nw = m.size();
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    double inner = 0.0;
    for (std::size_t k = 0; k < nw; ++k) inner += m.grid.weights[k] * slice[j * nw + k] / m.tau[k];
    s += q.weights[j] * inner;
  }
  return s;
}

std::vector<double> apply_boundary_left(double t, const IncomingData& phi, const MaterialModel& m,
                                        const AngularQuadrature& q) {
  const std::size_t nw = m.size(), half = q.half();
  std::vector<double> out((q.size() - half) * nw);
  const bool nonneg = phi.nonnegative();
  for (std::size_t j = half; j < q.size(); ++j)
    for (std::size_t k = 0; k < nw; ++k) {
      double v = phi.value(t, q.nodes[j], m.grid.nodes[k]);
      if (nonneg && v < 0.0)
        throw ConfigError("incoming data negative at t = " + std::to_string(t) + ", mu = " +
                          std::to_string(q.nodes[j]) + ", omega = " + std::to_string(m.grid.nodes[k]) +
                          " although declared nonnegative");
      out[(j - half) * nw + k] = v;
    }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> apply_interface(
    const std::vector<double>& f_pos, const std::vector<double>& g_neg,
    const InterfaceCoefficients& c, const AngularQuadrature& q) {
  const std::size_t half = q.half(), nw = c.eta1.size();
  std::vector<double> f_neg(half * nw), g_pos(half * nw);
  for (std::size_t j = 0; j < half; ++j) {
    // Node j (mu < 0) pairs with node mirror(j) (-mu > 0), stored at mirror(j) - half.
    std::size_t p = q.mirror(j) - half;
    for (std::size_t k = 0; k < nw; ++k)
      f_neg[j * nw + k] = c.eta1[k] * f_pos[p * nw + k] + c.zeta1[k] * g_neg[j * nw + k];
  }
  for (std::size_t jp = 0; jp < half; ++jp) {
    std::size_t jm = q.mirror(jp + half);
    for (std::size_t k = 0; k < nw; ++k)
      g_pos[jp * nw + k] = c.eta2[k] * f_pos[jp * nw + k] + c.zeta2[k] * g_neg[jm * nw + k];
  }
  return {std::move(f_neg), std::move(g_pos)};
}

std::vector<double> apply_boundary_right(const std::vector<double>& g_pos,
                                         const InterfaceCoefficients& c, const MaterialModel& m,
                                         const AngularQuadrature& q) {
  const std::size_t nw = m.size(), half = q.half();
  double flux = 0.0;
  for (std::size_t j = half; j < q.size(); ++j) {
    double inner = 0.0;
    for (std::size_t k = 0; k < nw; ++k) inner += m.grid.weights[k] * m.v[k] * g_pos[(j - half) * nw + k];
    flux += q.weights[j] * q.nodes[j] * inner;
  }
  std::vector<double> per_omega = diffusive_reflux(flux, c, m);
  std::vector<double> out(half * nw);
  for (std::size_t j = 0; j < half; ++j)
    for (std::size_t k = 0; k < nw; ++k) out[j * nw + k] = per_omega[k];
  return out;
}

BoundaryTrace make_trace_header(const MaterialModel& m, const AngularQuadrature& q, double dt) {
  BoundaryTrace tr;
  tr.dt = dt;
  tr.mu.assign(q.nodes.begin(), q.nodes.begin() + q.half());
  tr.mu_weights.assign(q.weights.begin(), q.weights.begin() + q.half());
  tr.omega = m.grid.nodes;
  tr.omega_weights = m.grid.weights;
  return tr;
}

BoundaryTrace run_forward(TransportSolver& solver, double T_end,
                          const std::function<void(const TransportSolver&)>& observer) {
  const double dt = solver.options().dt;
  BoundaryTrace tr = make_trace_header(solver.material(), solver.angular(), dt);
  const long steps = static_cast<long>(std::ceil(T_end / dt - 1e-9));
  tr.times.reserve(steps + 1);
  tr.outgoing.reserve(static_cast<std::size_t>(steps + 1) * tr.stride());
  auto record = [&] {
    tr.times.push_back(solver.time());
    std::vector<double> out = solver.outgoing_left();
    tr.outgoing.insert(tr.outgoing.end(), out.begin(), out.end());
    if (solver.kind() == SystemKind::kFull) tr.right_flux.push_back(solver.right_flux());
  };
  solver.start();
  record();
  if (observer) observer(solver);
  while (solver.step_index() < steps) {
    solver.step();
    record();
    if (observer) observer(solver);
  }
  return tr;
}

BoundaryTrace run_forward(const MaterialModel& m, const AngularQuadrature& q,
                          const InterfaceCoefficients& c, std::shared_ptr<const IncomingData> phi,
                          double T_end, const SolverOptions& o) {
  SolverOptions capped = o;
  capped.horizon_steps = static_cast<long>(std::ceil(T_end / o.dt - 1e-9));
  TransportSolver s(m, q, c, capped, SystemKind::kFull);
  s.set_incoming(std::move(phi));
  return run_forward(s, T_end);
}

}  // namespace phonon
