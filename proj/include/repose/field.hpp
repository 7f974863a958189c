#pragma once

#include "repose/bvh.hpp"
#include "repose/math.hpp"
#include "repose/mesh.hpp"

#include <array>
#include <memory>
#include <thread>
#include <vector>

namespace repose {

// A point sample of an implicit field.
struct FieldSample {
    double occupancy = 0.0;      // [0,1]
    Vec3 normal = Vec3(0, 0, 1); // unit
    Vec3 color = Vec3(0.5, 0.5, 0.5);  // rgb in [0,1]
};

// Evaluatable occupancy/normal/color field over the canonical volume.
class CanonicalField {
public:
    virtual ~CanonicalField() = default;
    virtual FieldSample sample(const Vec3& p) const = 0;
    double occupancy(const Vec3& p) const { return sample(p).occupancy; }
};

// Regular sample lattice: value index (i,j,k) sits at origin + (i,j,k)*spacing.
// Values are stored as 32-bit floats, matching the on-disk payload exactly.
struct ScalarGrid {
    std::array<int, 3> resolution = {0, 0, 0};
    Vec3 origin = Vec3::Zero();
    double spacing = 0.0;
    std::vector<float> values;

    std::size_t value_count() const {
        return static_cast<std::size_t>(resolution[0]) * static_cast<std::size_t>(resolution[1]) *
               static_cast<std::size_t>(resolution[2]);
    }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(resolution[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(resolution[0]) +
               static_cast<std::size_t>(i);
    }

    float at(int i, int j, int k) const { return values[index(i, j, k)]; }
    float& at(int i, int j, int k) { return values[index(i, j, k)]; }

    Vec3 position(int i, int j, int k) const {
        return origin + spacing * Vec3(i, j, k);
    }

    void validate() const {
        require(spacing > 0.0, "ScalarGrid: spacing must be > 0");
        require(resolution[0] >= 1 && resolution[1] >= 1 && resolution[2] >= 1,
                "ScalarGrid: resolution must be >= 1 per axis");
        require(values.size() == value_count(), "ScalarGrid: value count does not match resolution");
    }
};

// Lattice placement for evaluate_on_grid.
struct GridSpec {
    std::array<int, 3> resolution = {256, 256, 256};
    Vec3 origin = Vec3::Zero();  // first sample position
    double spacing = 0.01;

    // n^3 samples at the cell centers of [lo, hi]^3 (cubic cells).
    static GridSpec centered(const Vec3& lo, const Vec3& hi, int n) {
        require(n >= 2, "GridSpec: resolution must be >= 2");
        GridSpec g;
        g.resolution = {n, n, n};
        g.spacing = (hi.x() - lo.x()) / n;
        require(g.spacing > 0.0, "GridSpec: empty box");
        g.origin = lo + Vec3::Constant(0.5 * g.spacing);
        return g;
    }

    // Default canonical volume: [-1.28, 1.28]^3 at 256^3.
    static GridSpec canonical_default(int n = 256) {
        return centered(Vec3::Constant(-1.28), Vec3::Constant(1.28), n);
    }
};

struct VectorGrid {
    std::array<int, 3> resolution = {0, 0, 0};
    Vec3 origin = Vec3::Zero();
    double spacing = 0.0;
    std::vector<Vec3> values;

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(resolution[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(resolution[0]) +
               static_cast<std::size_t>(i);
    }
};

// Sparse point samples with per-point attributes; normals/colors optional.
struct FieldSampleSet {
    std::vector<Vec3> positions;
    std::vector<double> occupancy;
    std::vector<Vec3> normals;
    std::vector<Vec3> colors;

    std::size_t size() const { return positions.size(); }
    bool has_normals() const { return normals.size() == positions.size() && !positions.empty(); }
    bool has_colors() const { return colors.size() == positions.size() && !positions.empty(); }
};

// ---------------------------------------------------------------------------
// Field implementations

// Logistic occupancy of the signed distance to a sphere. sharpness is the
// distance over which the transition happens (occupancy 0.5 exactly on the
// surface).
class AnalyticSphere final : public CanonicalField {
public:
    AnalyticSphere(const Vec3& center, double radius, double sharpness = 0.01,
                   const Vec3& color = Vec3(0.8, 0.8, 0.8))
        : center_(center), radius_(radius), sharpness_(sharpness), color_(color) {
        require(radius > 0.0 && sharpness > 0.0, "AnalyticSphere: radius and sharpness must be > 0");
    }

    FieldSample sample(const Vec3& p) const override {
        const Vec3 d = p - center_;
        const double sd = d.norm() - radius_;
        FieldSample s;
        s.occupancy = logistic(-sd / sharpness_);
        s.normal = normalized_or(d, Vec3(0, 0, 1));
        s.color = color_;
        return s;
    }

private:
    Vec3 center_;
    double radius_, sharpness_;
    Vec3 color_;
};

class AnalyticBox final : public CanonicalField {
public:
    AnalyticBox(const Vec3& center, const Vec3& half_extent, double sharpness = 0.01,
                const Vec3& color = Vec3(0.8, 0.8, 0.8))
        : center_(center), half_(half_extent), sharpness_(sharpness), color_(color) {}

    FieldSample sample(const Vec3& p) const override {
        const Vec3 q = (p - center_).cwiseAbs() - half_;
        const double outside = q.cwiseMax(Vec3::Zero()).norm();
        const double inside = std::min(q.maxCoeff(), 0.0);
        const double sd = outside + inside;
        FieldSample s;
        s.occupancy = logistic(-sd / sharpness_);
        // gradient direction of the box distance
        int axis = 0;
        const Vec3 aq = (p - center_).cwiseAbs();
        if (aq.y() - half_.y() > aq.x() - half_.x()) axis = 1;
        if (aq.z() - half_.z() > aq[axis] - half_[axis]) axis = 2;
        Vec3 n = Vec3::Zero();
        n[axis] = (p - center_)[axis] >= 0.0 ? 1.0 : -1.0;
        if (outside > 0.0) n = normalized_or(q.cwiseMax(Vec3::Zero()).cwiseProduct((p - center_).cwiseSign()), n);
        s.normal = n;
        s.color = color_;
        return s;
    }

private:
    Vec3 center_, half_;
    double sharpness_;
    Vec3 color_;
};

// Occupancy as the logistic of the signed distance to a reference mesh;
// normal and color come from the nearest surface point. The 0.5 level set
// coincides with the mesh surface.
class MeshSDFField final : public CanonicalField {
public:
    explicit MeshSDFField(const TriMesh& mesh, double sharpness = 0.01)
        : mesh_(&mesh), query_(mesh), sharpness_(sharpness) {
        require(sharpness > 0.0, "MeshSDFField: sharpness must be > 0");
    }

    const MeshQuery& query() const { return query_; }

    FieldSample sample(const Vec3& p) const override {
        const MeshQuery::Result r = query_.closest(p);
        const double sd = (p - r.point).dot(r.pseudonormal) < 0.0 ? -r.distance : r.distance;
        FieldSample s;
        s.occupancy = logistic(-sd / sharpness_);
        s.normal = mesh_->has_normals() ? normalized_or(query_.interpolate(r, mesh_->normals), r.pseudonormal)
                                        : r.pseudonormal;
        if (mesh_->has_colors()) s.color = clamp01(query_.interpolate(r, mesh_->colors));
        return s;
    }

private:
    const TriMesh* mesh_;
    MeshQuery query_;
    double sharpness_;
};

class ConstantField final : public CanonicalField {
public:
    explicit ConstantField(double occupancy, const Vec3& normal = Vec3(0, 0, 1),
                           const Vec3& color = Vec3(0.5, 0.5, 0.5)) {
        value_.occupancy = occupancy;
        value_.normal = normal;
        value_.color = color;
    }
    FieldSample sample(const Vec3&) const override { return value_; }

private:
    FieldSample value_;
};

// Trilinear interpolation of a stored occupancy grid, with optional normal and
// color grids on the same lattice. Coordinates are clamped to the lattice hull.
class StoredGridField final : public CanonicalField {
public:
    explicit StoredGridField(ScalarGrid occupancy, std::shared_ptr<VectorGrid> normals = nullptr,
                             std::shared_ptr<VectorGrid> colors = nullptr)
        : grid_(std::move(occupancy)), normals_(std::move(normals)), colors_(std::move(colors)) {
        grid_.validate();
    }

    const ScalarGrid& grid() const { return grid_; }

    FieldSample sample(const Vec3& p) const override {
        FieldSample s;
        s.occupancy = clamp01(trilinear(p));
        if (normals_) {
            s.normal = normalized_or(trilinear_vec(*normals_, p), Vec3(0, 0, 1));
        } else {
            s.normal = normalized_or(-occupancy_gradient(p), Vec3(0, 0, 1));
        }
        if (colors_) s.color = clamp01(trilinear_vec(*colors_, p));
        return s;
    }

private:
    ScalarGrid grid_;
    std::shared_ptr<VectorGrid> normals_;
    std::shared_ptr<VectorGrid> colors_;

    struct Cell {
        int i0, j0, k0;
        double fx, fy, fz;
    };

    Cell locate(const Vec3& p) const {
        Cell c;
        const Vec3 g = (p - grid_.origin) / grid_.spacing;
        auto split = [](double v, int n, int* i0, double* f) {
            double x = std::clamp(v, 0.0, static_cast<double>(n - 1));
            double fl = std::floor(x);
            if (fl > n - 2) fl = n - 2;
            if (n == 1) fl = 0;
            *i0 = static_cast<int>(fl);
            *f = std::clamp(x - fl, 0.0, 1.0);
        };
        split(g.x(), grid_.resolution[0], &c.i0, &c.fx);
        split(g.y(), grid_.resolution[1], &c.j0, &c.fy);
        split(g.z(), grid_.resolution[2], &c.k0, &c.fz);
        return c;
    }

    double trilinear(const Vec3& p) const {
        const Cell c = locate(p);
        const int i1 = std::min(c.i0 + 1, grid_.resolution[0] - 1);
        const int j1 = std::min(c.j0 + 1, grid_.resolution[1] - 1);
        const int k1 = std::min(c.k0 + 1, grid_.resolution[2] - 1);
        auto v = [&](int i, int j, int k) { return static_cast<double>(grid_.at(i, j, k)); };
        const double c00 = v(c.i0, c.j0, c.k0) * (1 - c.fx) + v(i1, c.j0, c.k0) * c.fx;
        const double c10 = v(c.i0, j1, c.k0) * (1 - c.fx) + v(i1, j1, c.k0) * c.fx;
        const double c01 = v(c.i0, c.j0, k1) * (1 - c.fx) + v(i1, c.j0, k1) * c.fx;
        const double c11 = v(c.i0, j1, k1) * (1 - c.fx) + v(i1, j1, k1) * c.fx;
        const double c0 = c00 * (1 - c.fy) + c10 * c.fy;
        const double c1 = c01 * (1 - c.fy) + c11 * c.fy;
        return c0 * (1 - c.fz) + c1 * c.fz;
    }

    Vec3 trilinear_vec(const VectorGrid& g, const Vec3& p) const {
        const Cell c = locate(p);
        const int i1 = std::min(c.i0 + 1, g.resolution[0] - 1);
        const int j1 = std::min(c.j0 + 1, g.resolution[1] - 1);
        const int k1 = std::min(c.k0 + 1, g.resolution[2] - 1);
        auto v = [&](int i, int j, int k) { return g.values[g.index(i, j, k)]; };
        const Vec3 c00 = v(c.i0, c.j0, c.k0) * (1 - c.fx) + v(i1, c.j0, c.k0) * c.fx;
        const Vec3 c10 = v(c.i0, j1, c.k0) * (1 - c.fx) + v(i1, j1, c.k0) * c.fx;
        const Vec3 c01 = v(c.i0, c.j0, k1) * (1 - c.fx) + v(i1, c.j0, k1) * c.fx;
        const Vec3 c11 = v(c.i0, j1, k1) * (1 - c.fx) + v(i1, j1, k1) * c.fx;
        const Vec3 c0 = c00 * (1 - c.fy) + c10 * c.fy;
        const Vec3 c1 = c01 * (1 - c.fy) + c11 * c.fy;
        return c0 * (1 - c.fz) + c1 * c.fz;
    }

    Vec3 occupancy_gradient(const Vec3& p) const {
        const double h = 0.5 * grid_.spacing;
        Vec3 g;
        for (int a = 0; a < 3; ++a) {
            Vec3 lo = p, hi = p;
            lo[a] -= h;
            hi[a] += h;
            g[a] = (trilinear(hi) - trilinear(lo)) / (2 * h);
        }
        return g;
    }
};

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

// Cumulative face areas for uniform-by-area triangle selection.
inline std::vector<double> face_area_cdf(const TriMesh& mesh) {
    std::vector<double> cdf(mesh.face_count());
    double acc = 0.0;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        acc += mesh.face_area(f);
        cdf[f] = acc;
    }
    require(acc > 0.0, "sampling: mesh has zero surface area");
    return cdf;
}

struct SurfacePoint {
    std::size_t face;
    Vec3 barycentric;
    Vec3 position;
};

inline SurfacePoint sample_surface_point(const TriMesh& mesh, const std::vector<double>& cdf, Rng& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double target = uni(rng) * cdf.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    const std::size_t f = static_cast<std::size_t>(it - cdf.begin());
    const double r1 = std::sqrt(uni(rng));
    const double r2 = uni(rng);
    SurfacePoint sp;
    sp.face = std::min(f, mesh.face_count() - 1);
    sp.barycentric = Vec3(1.0 - r1, r1 * (1.0 - r2), r1 * r2);
    const auto& t = mesh.faces[sp.face];
    sp.position = sp.barycentric.x() * mesh.vert(t[0]) + sp.barycentric.y() * mesh.vert(t[1]) +
                  sp.barycentric.z() * mesh.vert(t[2]);
    return sp;
}

}  // namespace detail

// Uniform-by-area surface points perturbed by isotropic Gaussian noise with
// standard deviation `sigma`. Deterministic for a fixed seed.
inline std::vector<Vec3> sample_gaussian_around_surface(const TriMesh& mesh, std::size_t count = 20480,
                                                        double sigma = 0.05,
                                                        std::uint64_t seed = 0) {
    require(!mesh.empty(), "sample_gaussian_around_surface: empty mesh");
    require(count > 0, "sample_gaussian_around_surface: count must be > 0");
    require(sigma >= 0.0, "sample_gaussian_around_surface: sigma must be >= 0");
    const std::vector<double> cdf = detail::face_area_cdf(mesh);
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        detail::SurfacePoint sp = detail::sample_surface_point(mesh, cdf, rng);
        const Vec3 noise(gauss(rng), gauss(rng), gauss(rng));
        out.push_back(sp.position + sigma * noise);
    }
    return out;
}

// Uniform-by-area surface samples with interpolated normals and colors.
// Occupancy is the isosurface value 0.5 for every sample.
inline FieldSampleSet sample_surface(const TriMesh& mesh, std::size_t count = 51200,
                                     std::uint64_t seed = 0) {
    require(!mesh.empty(), "sample_surface: empty mesh");
    require(count > 0, "sample_surface: count must be > 0");
    const std::vector<double> cdf = detail::face_area_cdf(mesh);
    Rng rng(seed);
    FieldSampleSet set;
    set.positions.reserve(count);
    set.occupancy.assign(count, 0.5);
    set.normals.reserve(count);
    if (mesh.has_colors()) set.colors.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const detail::SurfacePoint sp = detail::sample_surface_point(mesh, cdf, rng);
        const auto& t = mesh.faces[sp.face];
        set.positions.push_back(sp.position);
        if (mesh.has_normals()) {
            const Vec3 n = sp.barycentric.x() * mesh.normals[static_cast<std::size_t>(t[0])] +
                           sp.barycentric.y() * mesh.normals[static_cast<std::size_t>(t[1])] +
                           sp.barycentric.z() * mesh.normals[static_cast<std::size_t>(t[2])];
            set.normals.push_back(normalized_or(n, mesh.face_normal(sp.face)));
        } else {
            set.normals.push_back(mesh.face_normal(sp.face));
        }
        if (mesh.has_colors()) {
            const Vec3 c = sp.barycentric.x() * mesh.colors[static_cast<std::size_t>(t[0])] +
                           sp.barycentric.y() * mesh.colors[static_cast<std::size_t>(t[1])] +
                           sp.barycentric.z() * mesh.colors[static_cast<std::size_t>(t[2])];
            set.colors.push_back(clamp01(c));
        }
    }
    return set;
}

// Dense occupancy evaluation at the lattice points of `spec`. Cells are
// independent, so evaluation parallelizes over z-slabs; the result does not
// depend on the thread count.
inline ScalarGrid evaluate_on_grid(const CanonicalField& field, const GridSpec& spec,
                                   VectorGrid* normals_out = nullptr, VectorGrid* colors_out = nullptr,
                                   unsigned threads = 0) {
    require(spec.resolution[0] >= 2 && spec.resolution[1] >= 2 && spec.resolution[2] >= 2,
            "evaluate_on_grid: resolution must be >= 2 per axis");
    require(spec.spacing > 0.0, "evaluate_on_grid: spacing must be > 0");
    ScalarGrid grid;
    grid.resolution = spec.resolution;
    grid.origin = spec.origin;
    grid.spacing = spec.spacing;
    grid.values.resize(grid.value_count());
    for (VectorGrid* vg : {normals_out, colors_out}) {
        if (!vg) continue;
        vg->resolution = spec.resolution;
        vg->origin = spec.origin;
        vg->spacing = spec.spacing;
        vg->values.resize(grid.value_count());
    }

    const int nz = spec.resolution[2];
    auto run_slab = [&](int k_begin, int k_end) {
        for (int k = k_begin; k < k_end; ++k)
            for (int j = 0; j < spec.resolution[1]; ++j)
                for (int i = 0; i < spec.resolution[0]; ++i) {
                    const FieldSample s = field.sample(grid.position(i, j, k));
                    grid.at(i, j, k) = static_cast<float>(s.occupancy);
                    if (normals_out) normals_out->values[grid.index(i, j, k)] = s.normal;
                    if (colors_out) colors_out->values[grid.index(i, j, k)] = s.color;
                }
    };

    if (threads == 0) {
        const char* env = std::getenv("REPOSE_THREADS");
        if (env) threads = static_cast<unsigned>(std::max(1, std::atoi(env)));
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(nz));
    if (threads <= 1) {
        run_slab(0, nz);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            const int k0 = static_cast<int>(static_cast<std::int64_t>(nz) * t / threads);
            const int k1 = static_cast<int>(static_cast<std::int64_t>(nz) * (t + 1) / threads);
            pool.emplace_back(run_slab, k0, k1);
        }
        for (auto& th : pool) th.join();
    }
    return grid;
}

// Binary inside/outside classification against a closed mesh. Sign comes from
// the angle-weighted pseudonormal at the closest surface feature; points on
// the surface count as inside. Throws for non-watertight input, naming the
// open edge count.
inline std::vector<double> occupancy_of_mesh(const TriMesh& mesh, const std::vector<Vec3>& points) {
    require(!mesh.empty(), "occupancy_of_mesh: empty mesh");
    const std::size_t open = open_edge_count(mesh);
    if (open != 0)
        throw std::invalid_argument("occupancy_of_mesh: mesh is not watertight (" +
                                    std::to_string(open) + " open edges)");
    const MeshQuery query(mesh);
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = query.occupancy(points[i]);
    return out;
}

}  // namespace repose
