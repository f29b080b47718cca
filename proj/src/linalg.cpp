#include "covtest/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "covtest/errors.hpp"
#include "covtest/kernels.hpp"

namespace covtest {

namespace {

constexpr int kMaxSweeps = 64;

double hermitian_asymmetry(const ComplexMatrix& a) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cdouble d = a(i, j) - std::conj(a(j, i));
            num += std::norm(d);
            den += std::norm(a(i, j));
        }
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

ComplexMatrix symmetrized(const ComplexMatrix& a) {
    ComplexMatrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
    return s;
}

void check_square_hermitian(const ComplexMatrix& a, const char* who) {
    if (!a.square() || a.empty()) {
        throw NotSquareError(std::string(who) + ": matrix is not square");
    }
    if (hermitian_asymmetry(a) > kHermitianTol) {
        throw NotHermitianError(std::string(who) + ": asymmetry exceeds tolerance");
    }
}

// c, s, and the phase of the off-diagonal pivot for a two-sided rotation
// that annihilates a Hermitian 2x2 off-diagonal entry.
struct JacobiRot {
    double c, s;
    cdouble phase;  // unit modulus
};

JacobiRot make_rotation(double app, double aqq, cdouble apq) {
    const double r = std::abs(apq);
    const cdouble phase = apq / r;
    const double zeta = (app - aqq) / (2.0 * r);
    const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(zeta, 1.0));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    return {c, t * c, phase};
}

}  // namespace

HermitianEvd hermitian_evd(const ComplexMatrix& input) {
    check_square_hermitian(input, "hermitian_evd");
    const std::size_t n = input.rows();
    ComplexMatrix a = symmetrized(input);
    ComplexMatrix v = ComplexMatrix::identity(n);

    const double scale = frobenius_norm(a);
    bool converged = scale == 0.0;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) <= 1e-14 * scale) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cdouble apq = a(p, q);
                if (std::abs(apq) == 0.0) continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const auto [c, s, ph] = make_rotation(app, aqq, apq);
                const cdouble se = s * std::conj(ph);   // applied on column p
                const cdouble sec = s * ph;             // applied on column q
                const double tr = (s / c) * std::abs(apq);
                // columns p and q of A and V
                for (std::size_t k = 0; k < n; ++k) {
                    const cdouble akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp + se * akq;
                    a(k, q) = -sec * akp + c * akq;
                    const cdouble vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp + se * vkq;
                    v(k, q) = -sec * vkp + c * vkq;
                }
                // rows p and q (conjugate mirror)
                for (std::size_t k = 0; k < n; ++k) {
                    const cdouble apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk + std::conj(se) * aqk;
                    a(q, k) = -std::conj(sec) * apk + c * aqk;
                }
                a(p, p) = cdouble(app + tr, 0.0);
                a(q, q) = cdouble(aqq - tr, 0.0);
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }
    if (!converged) {
        // one last check: the final sweep may have finished the job
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) > 1e-12 * scale) {
            throw NoConvergenceError("hermitian_evd: Jacobi sweeps did not converge");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a(i, i).real() > a(j, j).real();
    });

    HermitianEvd out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]).real();
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    detail::fix_column_phases(out.eigenvectors);
    return out;
}

ComplexMatrix hermitian_sqrt(const ComplexMatrix& a, bool inverse) {
    const HermitianEvd e = hermitian_evd(a);
    const double lmax = e.eigenvalues.empty() ? 0.0 : e.eigenvalues.front();
    const double floor = kPdFloorRel * lmax;
    for (double lambda : e.eigenvalues) {
        if (!(lambda > floor) || lmax <= 0.0) {
            throw NotPositiveDefiniteError("hermitian_sqrt: eigenvalue at or below pd floor");
        }
    }
    const std::size_t n = a.rows();
    ComplexMatrix scaled(n, n);  // V diag(lambda^{+-1/2})
    for (std::size_t j = 0; j < n; ++j) {
        const double f = inverse ? 1.0 / std::sqrt(e.eigenvalues[j]) : std::sqrt(e.eigenvalues[j]);
        for (std::size_t i = 0; i < n; ++i) scaled(i, j) = e.eigenvectors(i, j) * f;
    }
    return symmetrized(scaled * e.eigenvectors.adjoint());
}

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols); no phase convention yet.
Svd svd_tall(const ComplexMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    ComplexMatrix w = a;
    ComplexMatrix v = ComplexMatrix::identity(n);

    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0;
                cdouble gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += std::norm(w(i, p));
                    beta += std::norm(w(i, q));
                    gamma += std::conj(w(i, p)) * w(i, q);
                }
                const double g = std::abs(gamma);
                if (g <= 1e-15 * std::sqrt(alpha * beta) || g == 0.0) continue;
                rotated = true;
                const auto [c, s, ph] = make_rotation(alpha, beta, gamma);
                const cdouble se = s * std::conj(ph);
                const cdouble sec = s * ph;
                for (std::size_t i = 0; i < m; ++i) {
                    const cdouble wip = w(i, p), wiq = w(i, q);
                    w(i, p) = c * wip + se * wiq;
                    w(i, q) = -sec * wip + c * wiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const cdouble vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip + se * viq;
                    v(i, q) = -sec * vip + c * viq;
                }
            }
        }
        if (!rotated) converged = true;
    }
    if (!converged) throw NoConvergenceError("svd: Jacobi sweeps did not converge");

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) s2 += std::norm(w(i, j));
        sigma[j] = std::sqrt(s2);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    Svd out;
    out.singular_values.resize(n);
    out.u = ComplexMatrix(m, n);
    out.v = ComplexMatrix(n, n);
    const double smax = sigma.empty() ? 0.0 : sigma[order[0]];
    const double tiny = (smax > 0.0 ? smax : 1.0) * 1e-15;
    std::vector<std::size_t> deficient;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.singular_values[j] = sigma[src];
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
        if (sigma[src] > tiny) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) / sigma[src];
        } else {
            deficient.push_back(j);
        }
    }
    // Deterministic completion of numerically-null left vectors: orthonormalize
    // canonical basis vectors against the columns already in place.
    std::size_t next_basis = 0;
    for (std::size_t j : deficient) {
        for (; next_basis < m; ++next_basis) {
            std::vector<cdouble> cand(m, 0.0);
            cand[next_basis] = 1.0;
            for (std::size_t jj = 0; jj < n; ++jj) {
                if (std::find(deficient.begin(), deficient.end(), jj) != deficient.end() && jj >= j)
                    continue;
                cdouble proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += std::conj(out.u(i, jj)) * cand[i];
                for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * out.u(i, jj);
            }
            double nrm = 0.0;
            for (const cdouble& z : cand) nrm += std::norm(z);
            nrm = std::sqrt(nrm);
            if (nrm > 0.5) {
                ++next_basis;
                for (std::size_t i = 0; i < m; ++i) out.u(i, j) = cand[i] / nrm;
                break;
            }
        }
    }
    return out;
}

}  // namespace

Svd svd(const ComplexMatrix& a) {
    if (a.empty()) throw Error("svd: empty matrix");
    if (!a.is_finite()) throw Error("svd: non-finite input");
    Svd out;
    if (a.rows() < a.cols()) {
        Svd t = svd_tall(a.adjoint());
        out = {std::move(t.v), std::move(t.singular_values), std::move(t.u)};
    } else {
        out = svd_tall(a);
    }
    // Joint phase convention: pin the left vector, carry the same rotation to
    // the right vector so u s v^H is unchanged. Null pairs are pinned apart.
    const std::size_t m = out.u.rows();
    const std::size_t n = out.v.rows();
    const std::size_t k = out.singular_values.size();
    const double smax = k ? out.singular_values.front() : 0.0;
    const double tiny = (smax > 0.0 ? smax : 1.0) * 1e-15;
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t lead = 0;
        while (lead < m && std::abs(out.u(lead, j)) <= 1e-12) ++lead;
        if (lead == m) continue;
        const cdouble ph = std::conj(out.u(lead, j) / std::abs(out.u(lead, j)));
        for (std::size_t i = 0; i < m; ++i) out.u(i, j) *= ph;
        if (out.singular_values[j] > tiny) {
            for (std::size_t i = 0; i < n; ++i) out.v(i, j) *= ph;
        } else {
            std::size_t vlead = 0;
            while (vlead < n && std::abs(out.v(vlead, j)) <= 1e-12) ++vlead;
            if (vlead < n) {
                const cdouble vh = std::conj(out.v(vlead, j) / std::abs(out.v(vlead, j)));
                for (std::size_t i = 0; i < n; ++i) out.v(i, j) *= vh;
            }
        }
    }
    return out;
}

Qr qr(const ComplexMatrix& a) {
    if (a.empty()) throw Error("qr: empty matrix");
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw Error("qr: requires rows >= cols");
    ComplexMatrix r = a;
    std::vector<std::vector<cdouble>> reflectors;  // v per step, length m-k
    reflectors.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        double normx = 0.0;
        for (std::size_t i = k; i < m; ++i) normx += std::norm(r(i, k));
        normx = std::sqrt(normx);
        std::vector<cdouble> vvec(m - k, 0.0);
        if (normx > 0.0) {
            const cdouble x0 = r(k, k);
            const cdouble sgn = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cdouble(1.0, 0.0);
            for (std::size_t i = k; i < m; ++i) vvec[i - k] = r(i, k);
            vvec[0] += sgn * normx;
            double vnorm2 = 0.0;
            for (const cdouble& z : vvec) vnorm2 += std::norm(z);
            if (vnorm2 > 0.0) {
                const double betaf = 2.0 / vnorm2;
                for (std::size_t j = k; j < n; ++j) {
                    cdouble dot = 0.0;
                    for (std::size_t i = k; i < m; ++i) dot += std::conj(vvec[i - k]) * r(i, j);
                    dot *= betaf;
                    for (std::size_t i = k; i < m; ++i) r(i, j) -= dot * vvec[i - k];
                }
                r(k, k) = -sgn * normx;
                for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
            }
        }
        reflectors.push_back(std::move(vvec));
    }
    // economy Q: apply the reflectors in reverse to the leading identity block
    ComplexMatrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t kk = n; kk-- > 0;) {
        const auto& vvec = reflectors[kk];
        double vnorm2 = 0.0;
        for (const cdouble& z : vvec) vnorm2 += std::norm(z);
        if (vnorm2 == 0.0) continue;
        const double betaf = 2.0 / vnorm2;
        for (std::size_t j = 0; j < n; ++j) {
            cdouble dot = 0.0;
            for (std::size_t i = kk; i < m; ++i) dot += std::conj(vvec[i - kk]) * q(i, j);
            dot *= betaf;
            for (std::size_t i = kk; i < m; ++i) q(i, j) -= dot * vvec[i - kk];
        }
    }
    ComplexMatrix rtop(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) rtop(i, j) = r(i, j);
    return {std::move(q), std::move(rtop)};
}

namespace detail {

Lq lq_allow_deficient(const ComplexMatrix& a, bool* deficient) {
    if (a.empty()) throw Error("lq: empty matrix");
    if (a.rows() > a.cols()) throw Error("lq: requires rows <= cols");
    Qr f = qr(a.adjoint());
    const std::size_t r = a.rows();
    ComplexMatrix l = f.r.adjoint();     // r x r, lower triangular
    ComplexMatrix q = f.q.adjoint();     // r x cols, orthonormal rows
    double dmax = 0.0;
    for (std::size_t k = 0; k < r; ++k) dmax = std::max(dmax, std::abs(l(k, k)));
    bool any_deficient = dmax == 0.0;
    for (std::size_t k = 0; k < r; ++k) {
        const cdouble d = l(k, k);
        if (std::abs(d) <= 1e-12 * dmax) any_deficient = true;
        const cdouble ph = std::abs(d) > 0.0 ? std::conj(d / std::abs(d)) : cdouble(1.0, 0.0);
        for (std::size_t i = 0; i < r; ++i) l(i, k) *= ph;
        l(k, k) = cdouble(std::abs(d), 0.0);
        const cdouble qh = std::conj(ph);
        for (std::size_t j = 0; j < a.cols(); ++j) q(k, j) *= qh;
    }
    if (deficient) *deficient = any_deficient;
    return {std::move(l), std::move(q)};
}

void fix_column_phases(ComplexMatrix& m) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double mag = std::abs(m(i, j));
            if (mag > 1e-12) {
                const cdouble ph = std::conj(m(i, j) / mag);
                for (std::size_t k = 0; k < m.rows(); ++k) m(k, j) *= ph;
                break;
            }
        }
    }
}

}  // namespace detail

Lq lq(const ComplexMatrix& a) {
    bool deficient = false;
    Lq f = detail::lq_allow_deficient(a, &deficient);
    if (deficient) throw RankDeficientError("lq: input is not of full row rank");
    return f;
}

double logdet_pd(const ComplexMatrix& input) {
    check_square_hermitian(input, "logdet_pd");
    const std::size_t n = input.rows();
    ComplexMatrix a = symmetrized(input);
    double diag_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_max = std::max(diag_max, a(i, i).real());
    if (diag_max <= 0.0) throw NotPositiveDefiniteError("logdet_pd: non-positive diagonal");
    const double floor = diag_max * 1e-13;
    // in-place lower Cholesky
    double logdet = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(a(j, k));
        if (!(d > floor)) {
            throw NotPositiveDefiniteError("logdet_pd: Cholesky pivot at or below pd floor");
        }
        const double ljj = std::sqrt(d);
        logdet += 2.0 * std::log(ljj);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cdouble s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * std::conj(a(j, k));
            a(i, j) = s / ljj;
        }
    }
    return logdet;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cdouble w = a(i, j);
            if (w == cdouble(0.0, 0.0)) continue;
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q)
                    out(i * b.rows() + p, j * b.cols() + q) = w * b(p, q);
        }
    return out;
}

ComplexMatrix dft_matrix(std::size_t l) {
    if (l < 1) throw Error("dft_matrix: size must be at least 1");
    ComplexMatrix f(l, l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(l));
    for (std::size_t j = 0; j < l; ++j)
        for (std::size_t k = 0; k < l; ++k) {
            const double angle =
                -2.0 * std::numbers::pi * static_cast<double>((j * k) % l) / static_cast<double>(l);
            f(j, k) = std::polar(scale, angle);
        }
    return f;
}

double frobenius_sq(const ComplexMatrix& a) {
    return kernels::active().frob_sq(a.data(), a.rows() * a.cols());
}

double frobenius_norm(const ComplexMatrix& a) { return std::sqrt(frobenius_sq(a)); }

cdouble determinant(const ComplexMatrix& a) {
    if (!a.square() || a.empty()) throw NotSquareError("determinant: matrix is not square");
    const std::size_t n = a.rows();
    ComplexMatrix lu = a;
    cdouble det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(lu(i, k));
            if (m > best) {
                best = m;
                piv = i;
            }
        }
        if (best == 0.0) return 0.0;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            det = -det;
        }
        det *= lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cdouble f = lu(i, k) / lu(k, k);
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
        }
    }
    return det;
}

}  // namespace covtest
