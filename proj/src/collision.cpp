// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/collision.hpp"

#include "splatdyn/contacts.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace splatdyn {
namespace {

constexpr float kFar = std::numeric_limits<float>::max();

SupportPlane least_squares_plane(std::span<const Vec3d> points, const std::vector<std::uint32_t>& inliers)
{
    Vec3d c = Vec3d::Zero();
    for (auto i : inliers) c += points[i];
    c /= double(inliers.size());
    Mat3d cov = Mat3d::Zero();
    for (auto i : inliers) cov.noalias() += (points[i] - c) * (points[i] - c).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3d> es(cov);
    const Vec3d n = es.eigenvectors().col(0).normalized();
    return {n, n.dot(c)};
}

std::vector<std::uint32_t> inliers_of(std::span<const Vec3d> points, const SupportPlane& pl, double tau)
{
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < points.size(); ++i)
        if (std::abs(pl.signed_distance(points[i])) < tau) out.push_back(i);
    return out;
}

// Godunov update of the eikonal equation |grad u| = 1 / h-spaced grid.
double eikonal_update(double a, double b, double c, double h)
{
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    double u = a + h;
    if (u <= b) return u;
    u = 0.5 * (a + b + std::sqrt(std::max(0.0, 2 * h * h - (a - b) * (a - b))));
    if (u <= c) return u;
    const double s = a + b + c;
    const double disc = s * s - 3 * (a * a + b * b + c * c - h * h);
    return (s + std::sqrt(std::max(0.0, disc))) / 3;
}

// Distance from every cell to the nearest `source` cell center: exact within a small band,
// fast sweeping beyond it.
std::vector<double> distance_to(const Vec3i& dims, double h, const std::vector<std::uint8_t>& source)
{
    const std::size_t n = source.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(n, inf);
    auto idx = [&](int i, int j, int k) { return std::size_t(i) + std::size_t(dims.x()) * (j + std::size_t(dims.y()) * k); };
    constexpr int band = 2;
    for (int k = 0; k < dims.z(); ++k)
        for (int j = 0; j < dims.y(); ++j)
            for (int i = 0; i < dims.x(); ++i) {
                if (source[idx(i, j, k)]) {
                    d[idx(i, j, k)] = 0;
                    continue;
                }
                double best = inf;
                for (int dk = -band; dk <= band; ++dk)
                    for (int dj = -band; dj <= band; ++dj)
                        for (int di = -band; di <= band; ++di) {
                            const int a = i + di, b = j + dj, c = k + dk;
                            if (a < 0 || b < 0 || c < 0 || a >= dims.x() || b >= dims.y() || c >= dims.z()) continue;
                            if (source[idx(a, b, c)]) best = std::min(best, h * std::sqrt(double(di * di + dj * dj + dk * dk)));
                        }
                d[idx(i, j, k)] = best;
            }
    // Band values are exact; sweeping only fills what lies beyond them.
    std::vector<std::uint8_t> fixed(n);
    for (std::size_t i = 0; i < n; ++i) fixed[i] = std::isfinite(d[i]);

    for (int round = 0; round < 2; ++round) {
        for (int order = 0; order < 8; ++order) {
            const int si = order & 1 ? -1 : 1, sj = order & 2 ? -1 : 1, sk = order & 4 ? -1 : 1;
            for (int kk = 0; kk < dims.z(); ++kk) {
                const int k = sk > 0 ? kk : dims.z() - 1 - kk;
                for (int jj = 0; jj < dims.y(); ++jj) {
                    const int j = sj > 0 ? jj : dims.y() - 1 - jj;
                    for (int ii = 0; ii < dims.x(); ++ii) {
                        const int i = si > 0 ? ii : dims.x() - 1 - ii;
                        double& u = d[idx(i, j, k)];
                        if (fixed[idx(i, j, k)]) continue;
                        auto nb = [&](int a, int b, int c) {
                            if (a < 0 || b < 0 || c < 0 || a >= dims.x() || b >= dims.y() || c >= dims.z()) return inf;
                            return d[idx(a, b, c)];
                        };
                        const double a = std::min(nb(i - 1, j, k), nb(i + 1, j, k));
                        const double b = std::min(nb(i, j - 1, k), nb(i, j + 1, k));
                        const double c = std::min(nb(i, j, k - 1), nb(i, j, k + 1));
                        if (std::isinf(std::min({a, b, c}))) continue;
                        // Unavailable directions behave like an infinitely distant neighbor.
                        const double big = 1e30;
                        u = std::min(u, eikonal_update(std::isinf(a) ? big : a, std::isinf(b) ? big : b,
                                                       std::isinf(c) ? big : c, h));
                    }
                }
            }
        }
    }
    return d;
}

void resolve_contact(ParticleSet& p, std::size_t i, const Vec3d& n, double depth, std::vector<Vec3d>* external)
{
    Vec3d corr = depth * n;
    p.position[i] += corr;
    const Vec3d rel = p.position[i] - p.previous[i];
    const Vec3d tangent = rel - rel.dot(n) * n;
    const Vec3d f = coulomb_correction(tangent, depth, p.friction[i]);
    p.position[i] += f;
    corr += f;
    if (external) (*external)[i] += corr;
}

} // namespace

SupportPlane fit_support_plane(std::span<const Vec3d> points, const PlaneFitOptions& options)
{
    if (points.size() < 3) throw PlaneFitError("plane fitting needs at least 3 points");
    std::mt19937 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    std::size_t best_count = 0;
    SupportPlane best;
    for (int it = 0; it < options.iterations; ++it) {
        const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
        if (a == b || b == c || a == c) continue;
        Vec3d n = (points[b] - points[a]).cross(points[c] - points[a]);
        if (n.norm() < 1e-12) continue;
        n.normalize();
        const SupportPlane candidate{n, n.dot(points[a])};
        std::size_t count = 0;
        for (const auto& p : points) count += std::abs(candidate.signed_distance(p)) < options.inlier_distance;
        if (count > best_count) {
            best_count = count;
            best = candidate;
        }
    }
    if (best_count < 3) throw PlaneFitError("no plane found; supply the support plane manually");
    SupportPlane plane = best;
    for (int refine = 0; refine < 2; ++refine) {
        const auto inl = inliers_of(points, plane, options.inlier_distance);
        if (inl.size() < 3) break;
        plane = least_squares_plane(points, inl);
    }
    const double fraction = double(inliers_of(points, plane, options.inlier_distance).size()) / double(points.size());
    if (fraction < options.min_inlier_fraction) {
        throw PlaneFitError("best plane explains only " + std::to_string(fraction) +
                            " of the points; supply the support plane manually");
    }
    if (plane.normal.dot(options.gravity) > 0) plane = {-plane.normal, -plane.offset};
    return plane;
}

SupportPlane fit_support_plane(const SplatScene& environment, const PlaneFitOptions& options)
{
    std::vector<Vec3d> pts;
    pts.reserve(environment.size());
    for (const auto& k : environment.kernels()) pts.push_back(k.position.cast<double>());
    return fit_support_plane(pts, options);
}

DistanceField::DistanceField(const Vec3d& origin, double spacing, const Vec3i& dims, std::vector<float> values)
    : origin_(origin), spacing_(spacing), dims_(dims), values_(std::move(values))
{
    if (values_.size() != std::size_t(dims.x()) * dims.y() * dims.z()) throw ArgumentError("field size mismatch");
}

namespace {
// Cell and fraction along one axis; false when outside.
bool locate(double f, int n, int& i0, double& t)
{
    if (f < 0 || f > n - 1) return false;
    if (n == 1) {
        i0 = 0;
        t = 0;
        return true;
    }
    i0 = std::min(int(std::floor(f)), n - 2);
    t = f - i0;
    return true;
}
} // namespace

std::optional<double> DistanceField::sample(const Vec3d& x) const
{
    if (values_.empty()) return std::nullopt;
    const Vec3d f = (x - origin_) / spacing_;
    int i, j, k;
    double tx, ty, tz;
    if (!locate(f.x(), dims_.x(), i, tx) || !locate(f.y(), dims_.y(), j, ty) || !locate(f.z(), dims_.z(), k, tz))
        return std::nullopt;
    auto v = [&](int a, int b, int c) {
        return double(values_[index(std::min(i + a, dims_.x() - 1), std::min(j + b, dims_.y() - 1),
                                    std::min(k + c, dims_.z() - 1))]);
    };
    const double c00 = v(0, 0, 0) * (1 - tx) + v(1, 0, 0) * tx;
    const double c10 = v(0, 1, 0) * (1 - tx) + v(1, 1, 0) * tx;
    const double c01 = v(0, 0, 1) * (1 - tx) + v(1, 0, 1) * tx;
    const double c11 = v(0, 1, 1) * (1 - tx) + v(1, 1, 1) * tx;
    const double c0 = c00 * (1 - ty) + c10 * ty;
    const double c1 = c01 * (1 - ty) + c11 * ty;
    return c0 * (1 - tz) + c1 * tz;
}

Vec3d DistanceField::gradient(const Vec3d& x) const
{
    if (values_.empty()) return Vec3d::Zero();
    const Vec3d f = (x - origin_) / spacing_;
    int i, j, k;
    double tx, ty, tz;
    if (!locate(f.x(), dims_.x(), i, tx) || !locate(f.y(), dims_.y(), j, ty) || !locate(f.z(), dims_.z(), k, tz))
        return Vec3d::Zero();
    auto v = [&](int a, int b, int c) {
        return double(values_[index(std::min(i + a, dims_.x() - 1), std::min(j + b, dims_.y() - 1),
                                    std::min(k + c, dims_.z() - 1))]);
    };
    Vec3d g = Vec3d::Zero();
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                const double wx = a ? tx : 1 - tx, wy = b ? ty : 1 - ty, wz = c ? tz : 1 - tz;
                const double val = v(a, b, c);
                g.x() += val * (a ? 1 : -1) * wy * wz;
                g.y() += val * wx * (b ? 1 : -1) * wz;
                g.z() += val * wx * wy * (c ? 1 : -1);
            }
    return g / spacing_;
}

DistanceField sdf_from_occupancy(const Vec3d& origin, double spacing, const Vec3i& dims,
                                 const std::vector<std::uint8_t>& occupied)
{
    std::vector<std::uint8_t> empty(occupied.size());
    for (std::size_t i = 0; i < occupied.size(); ++i) empty[i] = !occupied[i];
    const auto outside = distance_to(dims, spacing, occupied);
    const bool any_empty = std::any_of(empty.begin(), empty.end(), [](auto e) { return e != 0; });
    const auto inside = any_empty ? distance_to(dims, spacing, empty) : std::vector<double>(occupied.size(), 0.0);
    std::vector<float> values(occupied.size());
    for (std::size_t i = 0; i < occupied.size(); ++i) {
        const double d = occupied[i] ? -inside[i] : outside[i];
        values[i] = std::isinf(d) ? (d > 0 ? kFar : -kFar) : float(d);
    }
    return DistanceField(origin, spacing, dims, std::move(values));
}

DistanceField build_sdf(const SplatScene& env, double h, const SdfOptions& options)
{
    if (env.empty()) throw ArgumentError("cannot build a distance field for an empty environment");
    if (!(h > 0)) throw ArgumentError("distance field spacing must be positive");
    Aabb box = env.bounds();
    float max_scale = 0;
    for (const auto& k : env.kernels()) max_scale = std::max(max_scale, k.scale.maxCoeff());
    const double dilation = std::min<double>(max_scale, options.max_dilation_cells * h);
    if (options.cover && !options.cover->empty()) {
        box.extend(options.cover->min);
        box.extend(options.cover->max);
    }
    const Vec3d pad = Vec3d::Constant(dilation + options.margin_cells * h);
    const Vec3d lo = box.min.cast<double>() - pad;
    const Vec3d hi = box.max.cast<double>() + pad;
    Vec3i dims;
    for (int a = 0; a < 3; ++a) dims[a] = int(std::ceil((hi[a] - lo[a]) / h)) + 1;
    const double cells = double(dims.x()) * dims.y() * dims.z();
    if (cells > double(options.max_cells)) {
        const double suggested = h * std::cbrt(cells / double(options.max_cells)) * 1.05;
        throw ArgumentError("distance field of " + std::to_string(std::size_t(cells)) + " cells exceeds budget of " +
                            std::to_string(options.max_cells) + "; try h >= " + std::to_string(suggested));
    }
    std::vector<std::uint8_t> occ(std::size_t(cells), 0);
    auto idx = [&](int i, int j, int k) { return std::size_t(i) + std::size_t(dims.x()) * (j + std::size_t(dims.y()) * k); };
    for (const auto& k : env.kernels()) {
        const Vec3d p = k.position.cast<double>();
        const double r = std::min<double>(k.scale.maxCoeff(), options.max_dilation_cells * h);
        const Vec3d f = (p - lo) / h;
        const Vec3i c(int(std::lround(f.x())), int(std::lround(f.y())), int(std::lround(f.z())));
        const int rc = int(std::ceil(r / h));
        for (int dk = -rc; dk <= rc; ++dk)
            for (int dj = -rc; dj <= rc; ++dj)
                for (int di = -rc; di <= rc; ++di) {
                    const Vec3i q = c + Vec3i(di, dj, dk);
                    if ((q.array() < 0).any() || (q.array() >= dims.array()).any()) continue;
                    const Vec3d center = lo + q.cast<double>() * h;
                    if ((di || dj || dk) && (center - p).norm() > r) continue;
                    occ[idx(q.x(), q.y(), q.z())] = 1;
                }
    }
    return sdf_from_occupancy(lo, h, dims, occ);
}

void collide_plane(ParticleSet& p, const SupportPlane& plane, std::vector<Vec3d>* external)
{
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.inv_mass[i] == 0) continue;
        const double depth = p.radius[i] - plane.signed_distance(p.position[i]);
        if (depth > 0) resolve_contact(p, i, plane.normal, depth, external);
    }
}

void collide_sdf(ParticleSet& p, const DistanceField& field, std::vector<Vec3d>* external)
{
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.inv_mass[i] == 0) continue;
        const auto phi = field.sample(p.position[i]);
        if (!phi || *phi >= p.radius[i]) continue;
        const Vec3d g = field.gradient(p.position[i]);
        const double gn = g.norm();
        if (gn < 1e-9) continue;
        resolve_contact(p, i, g / gn, p.radius[i] - *phi, external);
    }
}

} // namespace splatdyn
