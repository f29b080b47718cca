#include "covtest/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "covtest/errors.hpp"
#include "covtest/kernels.hpp"
#include "covtest/linalg.hpp"
#include "covtest/rng.hpp"

namespace covtest {

const char* to_string(GroupKind k) {
    return k == GroupKind::correlation ? "correlation" : "sphericity";
}

GroupKind group_for(DetectorId id) {
    return correlation_family(id) ? GroupKind::correlation : GroupKind::sphericity;
}

GroupElement identity_group_element(GroupKind kind, BlockGeometry geometry) {
    GroupElement g;
    g.kind = kind;
    g.geometry = geometry;
    if (kind == GroupKind::correlation) {
        g.perm.resize(geometry.l);
        std::iota(g.perm.begin(), g.perm.end(), 0);
        g.blocks.assign(geometry.l, ComplexMatrix::identity(geometry.n));
    } else {
        g.unitary = ComplexMatrix::identity(geometry.l);
        g.blocks.assign(1, ComplexMatrix::identity(geometry.n));
    }
    return g;
}

namespace {

ComplexMatrix random_invertible(Philox& rng, std::size_t n) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        ComplexMatrix b(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.next_cgaussian();
        if (std::abs(determinant(b)) >= 1e-9) return b;
    }
    throw DegenerateDrawError("random_group_element: no invertible block in 100 attempts");
}

ComplexMatrix haar_unitary(Philox& rng, std::size_t n) {
    ComplexMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) = rng.next_cgaussian();
    Qr f = qr(g);
    // phase correction by the R diagonal makes the distribution Haar
    for (std::size_t j = 0; j < n; ++j) {
        const cdouble d = f.r(j, j);
        const cdouble ph = std::abs(d) > 0.0 ? d / std::abs(d) : cdouble(1.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) f.q(i, j) *= ph;
    }
    return std::move(f.q);
}

}  // namespace

GroupElement random_group_element(GroupKind kind, BlockGeometry geometry, std::uint64_t seed,
                                  std::uint64_t stream) {
    if (!geometry.valid()) throw GeometryMismatchError("random_group_element: invalid geometry");
    Philox rng(seed, stream);
    GroupElement g;
    g.kind = kind;
    g.geometry = geometry;
    if (kind == GroupKind::correlation) {
        g.perm.resize(geometry.l);
        std::iota(g.perm.begin(), g.perm.end(), 0);
        for (std::size_t i = geometry.l; i-- > 1;) {
            const std::size_t j = rng.next_below(i + 1);
            std::swap(g.perm[i], g.perm[j]);
        }
        g.blocks.reserve(geometry.l);
        for (std::size_t k = 0; k < geometry.l; ++k) g.blocks.push_back(random_invertible(rng, geometry.n));
    } else {
        g.unitary = haar_unitary(rng, geometry.l);
        g.blocks.push_back(random_invertible(rng, geometry.n));
    }
    return g;
}

SampleSet apply_group(const GroupElement& g, const SampleSet& data) {
    if (!(g.geometry == data.geometry))
        throw GeometryMismatchError("apply_group: element and data geometries differ");
    const std::size_t l = g.geometry.l, n = g.geometry.n;
    SampleSet out = data;
    const auto& ops = kernels::active();
    if (g.kind == GroupKind::correlation) {
        for (std::size_t s = 0; s < data.m; ++s) {
            const cdouble* x = data.sample(s);
            cdouble* y = out.sample(s);
            for (std::size_t k = 0; k < l; ++k) {
                const std::size_t src = g.perm[k];
                ops.matvec(g.blocks[src].data(), n, n, x + src * n, y + k * n);
            }
        }
    } else {
        std::vector<cdouble> mixed(n);
        for (std::size_t s = 0; s < data.m; ++s) {
            const cdouble* x = data.sample(s);
            cdouble* y = out.sample(s);
            for (std::size_t k = 0; k < l; ++k) {
                std::fill(mixed.begin(), mixed.end(), cdouble(0.0, 0.0));
                for (std::size_t j = 0; j < l; ++j) ops.axpy(g.unitary(k, j), x + j * n, mixed.data(), n);
                ops.matvec(g.blocks[0].data(), n, n, mixed.data(), y + k * n);
            }
        }
    }
    return out;
}

ComplexMatrix group_transform_matrix(const GroupElement& g) {
    const std::size_t l = g.geometry.l, n = g.geometry.n;
    if (g.kind == GroupKind::sphericity) return kron(g.unitary, g.blocks[0]);
    ComplexMatrix t(l * n, l * n);
    for (std::size_t k = 0; k < l; ++k) t.set_block(k * n, g.perm[k] * n, g.blocks[g.perm[k]]);
    return t;
}

InvarianceReport check_invariance(DetectorId id, const SampleSet& data, GroupKind kind,
                                  std::size_t trials, std::uint64_t seed, double rel_tol) {
    const DetectorStatistic base = evaluate(id, data);
    const double denom = std::abs(base.value) > 0.0 ? std::abs(base.value) : 1.0;
    InvarianceReport rep;
    rep.detector = id;
    rep.group = kind;
    rep.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const GroupElement g = random_group_element(kind, data.geometry, seed, t);
        const DetectorStatistic moved = evaluate(id, apply_group(g, data));
        rep.max_rel_dev = std::max(rep.max_rel_dev, std::abs(moved.value - base.value) / denom);
    }
    rep.pass = rep.max_rel_dev < rel_tol;
    return rep;
}

namespace {

// Weighted union-find tracking theta_i relative to the set root, used to pin
// the diagonal-phase freedom left by the SVD step. A link imposes
// theta_j - theta_i = delta.
class PhaseUnion {
public:
    explicit PhaseUnion(std::size_t n) : parent_(n), offset_(n, 0.0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    std::pair<std::size_t, double> resolve(std::size_t i) {
        if (parent_[i] == i) return {i, 0.0};
        auto [root, off] = resolve(parent_[i]);
        parent_[i] = root;
        offset_[i] += off;
        return {root, offset_[i]};
    }

    bool connected(std::size_t i, std::size_t j) {
        return resolve(i).first == resolve(j).first;
    }

    void link(std::size_t i, std::size_t j, double delta) {
        auto [ri, oi] = resolve(i);
        auto [rj, oj] = resolve(j);
        if (ri == rj) return;
        parent_[rj] = ri;
        offset_[rj] = delta + oi - oj;
    }

    double theta(std::size_t i) { return resolve(i).second; }

    bool all_connected() {
        const std::size_t r0 = resolve(0).first;
        for (std::size_t i = 1; i < parent_.size(); ++i)
            if (resolve(i).first != r0) return false;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<double> offset_;
};

constexpr double kPhasePinTol = 1e-5;
constexpr double kTieTol = 1e-9;

ComplexMatrix small_mul(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix c(a.rows(), b.cols());
    kernels::active().matmul_acc(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

}  // namespace

MaximalInvariant maximal_invariant(const ComplexMatrix& c_hat, BlockGeometry geometry) {
    const std::size_t L = geometry.l, N = geometry.n;
    if (L < 2) throw WrongGeometryError("maximal_invariant: requires L >= 2");
    if (c_hat.rows() != geometry.dim() || c_hat.cols() != geometry.dim())
        throw GeometryMismatchError("maximal_invariant: matrix does not match geometry");
    for (std::size_t k = 0; k < L; ++k)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const cdouble expect(i == j ? 1.0 : 0.0, 0.0);
                if (std::abs(c_hat(k * N + i, k * N + j) - expect) > 1e-8)
                    throw MalformedCoherenceError("maximal_invariant: diagonal blocks not identity");
            }

    MaximalInvariant out;

    // canonical vector ordering from the cross-block determinant magnitudes
    std::vector<std::vector<double>> dets(L, std::vector<double>(L, 0.0));
    for (std::size_t k = 0; k < L; ++k)
        for (std::size_t l = 0; l < L; ++l) {
            if (k == l) continue;
            dets[k][l] = std::abs(determinant(c_hat.block(k * N, l * N, N, N)));
        }
    std::vector<double> score(L, 0.0);
    for (std::size_t k = 0; k < L; ++k)
        for (std::size_t l = 0; l < L; ++l) score[k] += dets[k][l];

    std::size_t lead = 0;
    for (std::size_t k = 1; k < L; ++k)
        if (score[k] > score[lead]) lead = k;
    for (std::size_t k = 0; k < L; ++k)
        if (k != lead && std::abs(score[k] - score[lead]) <= kTieTol * std::max(1.0, score[lead]))
            out.degenerate = true;

    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < L; ++k)
        if (k != lead) rest.push_back(k);
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
        return dets[lead][a] > dets[lead][b];
    });
    for (std::size_t i = 0; i + 1 < rest.size(); ++i)
        if (std::abs(dets[lead][rest[i]] - dets[lead][rest[i + 1]]) <=
            kTieTol * std::max(1.0, dets[lead][rest[i]]))
            out.degenerate = true;

    out.ordering.push_back(lead);
    out.ordering.insert(out.ordering.end(), rest.begin(), rest.end());
    const auto& ord = out.ordering;
    auto blk = [&](std::size_t i, std::size_t j) {
        return c_hat.block(ord[i] * N, ord[j] * N, N, N);
    };

    // diagonalize the (1,2) cross block
    const Svd s12 = svd(blk(0, 1));
    out.xi12.resize(N);
    for (std::size_t i = 0; i < N; ++i)
        out.xi12[i] = std::clamp(s12.singular_values[i], 0.0, 1.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (out.xi12[i] < kTieTol) out.degenerate = true;
        if (i + 1 < N && out.xi12[i] - out.xi12[i + 1] < kTieTol) out.degenerate = true;
    }

    const ComplexMatrix uh = s12.u.adjoint();
    const ComplexMatrix vh = s12.v.adjoint();

    // first-row blocks: LQ factors; their Q parts rotate the later vectors
    std::vector<ComplexMatrix> q_rot(L);  // canonical positions 2..L-1
    for (std::size_t l = 2; l < L; ++l) {
        bool deficient = false;
        const Lq f = detail::lq_allow_deficient(small_mul(uh, blk(0, l)), &deficient);
        if (deficient) out.degenerate = true;
        out.l_blocks.push_back(f.l);
        q_rot[l] = f.q;
    }

    // remaining cross blocks
    for (std::size_t k = 1; k < L; ++k) {
        for (std::size_t l = k + 1; l < L; ++l) {
            if (l < 2) continue;
            ComplexMatrix x = k == 1 ? small_mul(vh, blk(1, l))
                                     : small_mul(q_rot[k], blk(k, l));
            x = small_mul(x, q_rot[l].adjoint());
            out.cross_blocks.emplace_back(k + 1, l + 1, std::move(x));
        }
    }

    // The SVD leaves a shared diagonal-phase freedom (U -> U Phi, V -> V Phi)
    // under which every component transforms entrywise as X -> Phi^H X Phi.
    // Pin it by walking the components in a fixed order and forcing the first
    // usable entry linking two phase indices to be real positive.
    if (N > 1) {
        PhaseUnion pin(N);
        auto scan = [&](const ComplexMatrix& x) {
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    if (i == j) continue;
                    const cdouble z = x(i, j);
                    if (std::abs(z) > kPhasePinTol && !pin.connected(i, j))
                        pin.link(i, j, -std::arg(z));
                }
        };
        for (const ComplexMatrix& lb : out.l_blocks) scan(lb);
        for (const auto& [k, l, x] : out.cross_blocks) scan(x);
        if (!pin.all_connected() && (L > 2)) out.degenerate = true;
        std::vector<cdouble> rot(N);
        for (std::size_t i = 0; i < N; ++i) rot[i] = std::polar(1.0, pin.theta(i));
        auto apply = [&](ComplexMatrix& x) {
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    x(i, j) *= std::conj(rot[i]) * rot[j];
        };
        for (ComplexMatrix& lb : out.l_blocks) apply(lb);
        for (auto& [k, l, x] : out.cross_blocks) apply(x);
    }
    return out;
}

std::vector<cdouble> flatten(const MaximalInvariant& mi) {
    std::vector<cdouble> v;
    for (double x : mi.xi12) v.emplace_back(x, 0.0);
    for (const ComplexMatrix& b : mi.l_blocks)
        v.insert(v.end(), b.data(), b.data() + b.rows() * b.cols());
    for (const auto& [k, l, b] : mi.cross_blocks)
        v.insert(v.end(), b.data(), b.data() + b.rows() * b.cols());
    return v;
}

double component_distance(const MaximalInvariant& a, const MaximalInvariant& b) {
    const std::vector<cdouble> fa = flatten(a), fb = flatten(b);
    if (fa.size() != fb.size())
        throw GeometryMismatchError("component_distance: invariants have different shapes");
    double m = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

}  // namespace covtest
