#include "terrafeat/error.hpp"
#include "terrafeat/ground.hpp"
#include "terrafeat/log.hpp"
#include "terrafeat/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace terrafeat {

void SplineConfig::validate() const
{
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("spline lambda must lie in (0, 1)");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("spline epsilon must be positive");
    if (!(node_cell >= 0.0))
        throw std::invalid_argument("spline node_cell must be positive (or 0 for the default)");
    if (!(irls_delta > 0.0))
        throw std::invalid_argument("spline irls_delta must be positive");
    if (!(cg_tol > 0.0))
        throw std::invalid_argument("spline cg_tol must be positive");
    if (cg_max_iter == 0)
        throw std::invalid_argument("spline cg_max_iter must be at least 1");
}

namespace {

void catmull_rom(double t, double w[4])
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

// 4x4 block of nodes starting at (i0, j0) with separable weights.
struct Basis {
    std::size_t i0 = 0;
    std::size_t j0 = 0;
    double wx[4];
    double wy[4];
};

Basis basis_at(const NodeSurface& s, double x, double y)
{
    Basis b;
    auto axis = [&](double coord, double origin, std::size_t n, std::size_t& first, double w[4]) {
        const double u = (coord - origin) / s.spacing;
        const double hi = static_cast<double>(n) - 3.0;
        const double cell = std::clamp(std::floor(u), 1.0, hi);
        first = static_cast<std::size_t>(cell) - 1;
        catmull_rom(u - cell, w);
    };
    axis(x, s.x0, s.nx, b.i0, b.wx);
    axis(y, s.y0, s.ny, b.j0, b.wy);
    return b;
}

double evaluate_basis(const NodeSurface& s, const Basis& b)
{
    double sum = 0.0;
    for (int jj = 0; jj < 4; ++jj) {
        const double* row = s.values.data() + (b.j0 + jj) * s.nx + b.i0;
        sum += b.wy[jj] * (b.wx[0] * row[0] + b.wx[1] * row[1] + b.wx[2] * row[2] + b.wx[3] * row[3]);
    }
    return sum;
}

NodeSurface make_surface(const RasterGeometry& domain, double spacing)
{
    NodeSurface s;
    s.spacing = spacing;
    const auto inner = [&](double extent) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / spacing - 1e-9)));
    };
    s.nx = inner(domain.x1() - domain.x0) + 4;
    s.ny = inner(domain.y1() - domain.y0) + 4;
    s.x0 = domain.x0 - spacing;
    s.y0 = domain.y0 - spacing;
    s.values.assign(s.nx * s.ny, 0.0);
    return s;
}

// One finite-difference operator: taps relative to the center node and the
// admissible center range (nodes whose taps all exist).
struct DiffOp {
    struct Tap {
        int di, dj;
        double coef;
    };
    std::array<Tap, 4> taps;
    int ntaps;
    int margin_x;
    int margin_y;
    double weight; ///< term weight in the objective
};

std::vector<DiffOp> diff_ops(double h, const SplineConfig& cfg)
{
    const double h2 = h * h;
    const double area = h2;
    const double smooth = cfg.lambda * area;
    std::vector<DiffOp> ops;
    ops.push_back({{{{-1, 0, 1.0 / h2}, {0, 0, -2.0 / h2}, {1, 0, 1.0 / h2}, {0, 0, 0.0}}}, 3, 1, 0, smooth});
    ops.push_back({{{{0, -1, 1.0 / h2}, {0, 0, -2.0 / h2}, {0, 1, 1.0 / h2}, {0, 0, 0.0}}}, 3, 0, 1, smooth});
    const double q = 1.0 / (4.0 * h2);
    ops.push_back({{{{1, 1, q}, {-1, 1, -q}, {1, -1, -q}, {-1, -1, q}}}, 4, 1, 1, 2.0 * smooth});
    const double g = 1.0 / (2.0 * h);
    ops.push_back({{{{1, 0, g}, {-1, 0, -g}, {0, 0, 0.0}, {0, 0, 0.0}}}, 2, 1, 0, cfg.epsilon});
    ops.push_back({{{{0, 1, g}, {0, -1, -g}, {0, 0, 0.0}, {0, 0, 0.0}}}, 2, 0, 1, cfg.epsilon});
    return ops;
}

template <typename Fn>
void for_each_op_node(const NodeSurface& s, const DiffOp& op, Fn&& fn)
{
    for (std::size_t j = op.margin_y; j + op.margin_y < s.ny; ++j)
        for (std::size_t i = op.margin_x; i + op.margin_x < s.nx; ++i)
            fn(i, j);
}

double apply_op(const NodeSurface& s, const DiffOp& op, std::size_t i, std::size_t j)
{
    double t = 0.0;
    for (int k = 0; k < op.ntaps; ++k) {
        const auto& tap = op.taps[k];
        t += tap.coef * s.values[(j + tap.dj) * s.nx + (i + tap.di)];
    }
    return t;
}

double smooth_abs(double t, double delta) { return std::sqrt(t * t + delta * delta); }

double data_penalty(double r, const SplineConfig& cfg)
{
    return cfg.data_term == DataTerm::l1 ? smooth_abs(r, cfg.irls_delta) : r * r;
}

// Symmetric matrix with the 7x7 node stencil of a bicubic data term.
class StencilMatrix {
public:
    static constexpr int kReach = 3;
    static constexpr int kSide = 2 * kReach + 1;
    static constexpr int kWidth = kSide * kSide;
    static constexpr int kCenter = kWidth / 2;

    StencilMatrix(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), a_(nx * ny * kWidth, 0.0) {}

    static constexpr int slot(int di, int dj) { return (dj + kReach) * kSide + (di + kReach); }

    void clear() { std::fill(a_.begin(), a_.end(), 0.0); }
    double* row(std::size_t p) { return a_.data() + p * kWidth; }
    double diag(std::size_t p) const { return a_[p * kWidth + kCenter]; }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const
    {
        const auto nx = static_cast<std::ptrdiff_t>(nx_);
        const auto ny = static_cast<std::ptrdiff_t>(ny_);
        for (std::ptrdiff_t j = 0; j < ny; ++j) {
            const std::ptrdiff_t dj_lo = std::max<std::ptrdiff_t>(-kReach, -j);
            const std::ptrdiff_t dj_hi = std::min<std::ptrdiff_t>(kReach, ny - 1 - j);
            for (std::ptrdiff_t i = 0; i < nx; ++i) {
                const std::ptrdiff_t di_lo = std::max<std::ptrdiff_t>(-kReach, -i);
                const std::ptrdiff_t di_hi = std::min<std::ptrdiff_t>(kReach, nx - 1 - i);
                const std::size_t p = static_cast<std::size_t>(j * nx + i);
                const double* r = a_.data() + p * kWidth;
                double sum = 0.0;
                for (std::ptrdiff_t dj = dj_lo; dj <= dj_hi; ++dj) {
                    const double* xr = x.data() + (j + dj) * nx + i;
                    const double* ar = r + (dj + kReach) * kSide + kReach;
                    for (std::ptrdiff_t di = di_lo; di <= di_hi; ++di)
                        sum += ar[di] * xr[di];
                }
                y[p] = sum;
            }
        }
    }

private:
    std::size_t nx_;
    std::size_t ny_;
    std::vector<double> a_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

struct CgOutcome {
    std::size_t iterations = 0;
    bool converged = false;
};

CgOutcome solve_pcg(const StencilMatrix& A, const std::vector<double>& b, std::vector<double>& x, double tol,
                    std::size_t max_iter)
{
    const std::size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), q(n), inv_diag(n);
    for (std::size_t i = 0; i < n; ++i)
        inv_diag[i] = A.diag(i) > 0.0 ? 1.0 / A.diag(i) : 1.0;
    A.multiply(x, q);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = b[i] - q[i];
    double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0)
        bnorm = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        z[i] = r[i] * inv_diag[i];
    p = z;
    double rz = dot(r, z);
    CgOutcome out;
    for (; out.iterations < max_iter; ++out.iterations) {
        if (std::sqrt(dot(r, r)) <= tol * bnorm) {
            out.converged = true;
            return out;
        }
        A.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0))
            break;
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            z[i] = r[i] * inv_diag[i];
        }
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    out.converged = std::sqrt(dot(r, r)) <= tol * bnorm;
    return out;
}

// Offsets between the 16 nodes of a basis block, as stencil slots.
const std::array<std::array<int, 16>, 16>& block_slots()
{
    static const auto table = [] {
        std::array<std::array<int, 16>, 16> t{};
        for (int k = 0; k < 16; ++k)
            for (int l = 0; l < 16; ++l)
                t[k][l] = StencilMatrix::slot(l % 4 - k % 4, l / 4 - k / 4);
        return t;
    }();
    return table;
}

struct LevelOutcome {
    std::vector<double> objective;
    std::size_t cg_iterations = 0;
    bool cg_converged = true;
};

// Runs the IRLS iterations on one node grid, starting from surface.values.
LevelOutcome irls(NodeSurface& surface, const std::vector<Point3>& samples, const SplineConfig& cfg)
{
    const auto ops = diff_ops(surface.spacing, cfg);
    const auto& slots = block_slots();
    StencilMatrix A(surface.nx, surface.ny);
    std::vector<double> rhs(surface.values.size());
    LevelOutcome out;
    out.objective.push_back(spline_objective(surface, samples, cfg));

    for (std::size_t it = 0; it < cfg.irls_iters; ++it) {
        A.clear();
        std::fill(rhs.begin(), rhs.end(), 0.0);

        // Each term c * rho(a.z - b) is majorised by c * omega / 2 * (a.z - b)^2,
        // omega = 1 / sqrt(t^2 + delta^2) at the current iterate (2 for squares).
        for (const Point3& s : samples) {
            const Basis b = basis_at(surface, s.x, s.y);
            const double r = evaluate_basis(surface, b) - s.z;
            const double omega = cfg.data_term == DataTerm::l1 ? 1.0 / smooth_abs(r, cfg.irls_delta) : 2.0;
            const double cw = (1.0 - cfg.lambda) * omega;
            double w[16];
            std::size_t node[16];
            for (int k = 0; k < 16; ++k) {
                w[k] = b.wx[k % 4] * b.wy[k / 4];
                node[k] = (b.j0 + k / 4) * surface.nx + (b.i0 + k % 4);
            }
            for (int k = 0; k < 16; ++k) {
                const double ck = cw * w[k];
                double* row = A.row(node[k]);
                for (int l = 0; l < 16; ++l)
                    row[slots[k][l]] += ck * w[l];
                rhs[node[k]] += ck * s.z;
            }
        }
        for (const DiffOp& op : ops) {
            for_each_op_node(surface, op, [&](std::size_t i, std::size_t j) {
                const double t = apply_op(surface, op, i, j);
                const double cw = op.weight / smooth_abs(t, cfg.irls_delta);
                for (int k = 0; k < op.ntaps; ++k) {
                    const auto& tk = op.taps[k];
                    double* row = A.row((j + tk.dj) * surface.nx + (i + tk.di));
                    for (int l = 0; l < op.ntaps; ++l) {
                        const auto& tl = op.taps[l];
                        row[StencilMatrix::slot(tl.di - tk.di, tl.dj - tk.dj)] += cw * tk.coef * tl.coef;
                    }
                }
            });
        }

        const CgOutcome cg = solve_pcg(A, rhs, surface.values, cfg.cg_tol, cfg.cg_max_iter);
        out.cg_iterations += cg.iterations;
        out.cg_converged = out.cg_converged && cg.converged;
        out.objective.push_back(spline_objective(surface, samples, cfg));
        const double prev = out.objective[out.objective.size() - 2];
        if (prev - out.objective.back() <= 1e-12 * std::abs(prev))
            break;
    }
    return out;
}

void check_footprint(const std::vector<Point3>& samples)
{
    double mx = 0.0, my = 0.0;
    for (const auto& p : samples) {
        mx += p.x;
        my += p.y;
    }
    const double n = static_cast<double>(samples.size());
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& p : samples) {
        sxx += (p.x - mx) * (p.x - mx);
        syy += (p.y - my) * (p.y - my);
        sxy += (p.x - mx) * (p.y - my);
    }
    const double trace = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    if (!(trace > 0.0) || det <= 1e-12 * trace * trace)
        throw NumericalError("ground candidates are collinear; the surface is undetermined");
}

} // namespace

double NodeSurface::evaluate(double x, double y) const
{
    return evaluate_basis(*this, basis_at(*this, x, y));
}

double spline_objective(const NodeSurface& surface, const std::vector<Point3>& samples, const SplineConfig& cfg)
{
    double data = 0.0;
    for (const Point3& s : samples)
        data += data_penalty(surface.evaluate(s.x, s.y) - s.z, cfg);
    double reg = 0.0;
    for (const DiffOp& op : diff_ops(surface.spacing, cfg)) {
        double sum = 0.0;
        for_each_op_node(surface, op, [&](std::size_t i, std::size_t j) {
            sum += smooth_abs(apply_op(surface, op, i, j), cfg.irls_delta);
        });
        reg += op.weight * sum;
    }
    return (1.0 - cfg.lambda) * data + reg;
}

SplineFitResult fit_dtm_spline_detailed(const GroundCandidates& candidates, const RasterGeometry& domain,
                                        const SplineConfig& config)
{
    config.validate();
    const auto& samples = candidates.samples;
    if (samples.size() < 3)
        throw std::invalid_argument("spline fit needs at least 3 ground candidates");
    if (domain.cell_count() == 0)
        throw std::invalid_argument("spline fit needs a nonempty output geometry");
    check_footprint(samples);

    const double spacing = config.node_cell > 0.0 ? config.node_cell : 4.0 * domain.cell;

    // Coarse levels: spacing doubles while the grid keeps at least four
    // node intervals per axis.
    std::size_t levels = 1;
    if (config.multilevel_init) {
        const double extent = std::min(domain.x1() - domain.x0, domain.y1() - domain.y0);
        while (levels < 6 && extent / (spacing * std::ldexp(1.0, static_cast<int>(levels))) >= 4.0)
            ++levels;
    }

    std::vector<double> zs;
    zs.reserve(samples.size());
    for (const auto& s : samples)
        zs.push_back(s.z);
    std::nth_element(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(zs.size() / 2), zs.end());
    const double median = zs[zs.size() / 2];

    SplineFitResult result;
    NodeSurface previous;
    for (std::size_t level = levels; level-- > 0;) {
        NodeSurface surface = make_surface(domain, spacing * std::ldexp(1.0, static_cast<int>(level)));
        if (level + 1 == levels) {
            std::fill(surface.values.begin(), surface.values.end(), median);
        } else {
            for (std::size_t j = 0; j < surface.ny; ++j)
                for (std::size_t i = 0; i < surface.nx; ++i)
                    surface.values[j * surface.nx + i] =
                        previous.evaluate(surface.x0 + static_cast<double>(i) * surface.spacing,
                                          surface.y0 + static_cast<double>(j) * surface.spacing);
        }
        if (level == 0) {
            LevelOutcome lv = irls(surface, samples, config);
            result.objective = std::move(lv.objective);
            result.cg_iterations += lv.cg_iterations;
            result.cg_converged = lv.cg_converged;
        } else {
            // Thin the data by 4 per level (hash-selected, deterministic) so
            // samples per node cell stay roughly constant.
            const std::uint64_t keep_one_in = std::uint64_t{1} << (2 * level);
            std::vector<Point3> thinned;
            for (std::size_t m = 0; m < samples.size(); ++m)
                if (splitmix64(m) % keep_one_in == 0)
                    thinned.push_back(samples[m]);
            const std::vector<Point3>& used = thinned.size() >= 64 ? thinned : samples;
            LevelOutcome lv = irls(surface, used, config);
            result.cg_iterations += lv.cg_iterations;
        }
        previous = std::move(surface);
    }
    result.surface = std::move(previous);
    if (!result.cg_converged)
        log::warn("spline DTM: conjugate gradient missed its tolerance in at least one IRLS step");

    result.dtm = RasterGrid(domain, 0.0);
    for (std::size_t row = 0; row < domain.height; ++row)
        for (std::size_t col = 0; col < domain.width; ++col)
            result.dtm.set(row, col, result.surface.evaluate(domain.center_x(col), domain.center_y(row)));
    return result;
}

RasterGrid fit_dtm_spline(const GroundCandidates& candidates, const RasterGeometry& domain,
                          const SplineConfig& config)
{
    return std::move(fit_dtm_spline_detailed(candidates, domain, config).dtm);
}

} // namespace terrafeat
