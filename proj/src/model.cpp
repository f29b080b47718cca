#include "covtest/model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "covtest/errors.hpp"
#include "covtest/kernels.hpp"
#include "covtest/linalg.hpp"
#include "covtest/rng.hpp"

namespace covtest {

using nlohmann::json;

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::correlation: return "correlation";
        case ScenarioKind::sphericity: return "sphericity";
        case ScenarioKind::latent_correlation: return "latent_correlation";
        case ScenarioKind::latent_sphericity: return "latent_sphericity";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    for (ScenarioKind k : {ScenarioKind::correlation, ScenarioKind::sphericity,
                           ScenarioKind::latent_correlation, ScenarioKind::latent_sphericity}) {
        if (s == to_string(k)) return k;
    }
    throw Error("unknown scenario kind: " + s);
}

namespace {

void require_geometry(BlockGeometry g) {
    if (!g.valid()) throw GeometryMismatchError("geometry: L and N must be at least 1");
}

ComplexMatrix hermitian_average(const ComplexMatrix& a) {
    ComplexMatrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
    return s;
}

bool offdiag_blocks_zero(const ComplexMatrix& a, BlockGeometry g, double tol) {
    for (std::size_t k = 0; k < g.l; ++k)
        for (std::size_t l = 0; l < g.l; ++l) {
            if (k == l) continue;
            for (std::size_t i = 0; i < g.n; ++i)
                for (std::size_t j = 0; j < g.n; ++j)
                    if (std::abs(a(k * g.n + i, l * g.n + j)) > tol) return false;
        }
    return true;
}

}  // namespace

Scenario scenario_circulant(BlockGeometry geometry, std::span<const double> omega,
                            ScenarioKind kind) {
    require_geometry(geometry);
    if (kind != ScenarioKind::correlation && kind != ScenarioKind::sphericity)
        throw Error("scenario_circulant: kind must be correlation or sphericity");
    if (omega.size() != geometry.l)
        throw GeometryMismatchError("scenario_circulant: omega length must equal L");
    for (double w : omega)
        if (!(w > 0.0)) throw NonPositiveOmegaError("scenario_circulant: omega entries must be positive");

    const ComplexMatrix f = dft_matrix(geometry.l);
    ComplexMatrix fo(geometry.l, geometry.l);  // F * diag(omega)
    for (std::size_t i = 0; i < geometry.l; ++i)
        for (std::size_t j = 0; j < geometry.l; ++j) fo(i, j) = f(i, j) * omega[j];
    const ComplexMatrix circ = hermitian_average(fo * f.adjoint());

    Scenario s;
    s.geometry = geometry;
    s.kind = kind;
    s.r_h0 = ComplexMatrix::identity(geometry.dim());
    s.r_h1 = kron(circ, ComplexMatrix::identity(geometry.n));

    json d;
    d["model"] = "circulant";
    d["kind"] = to_string(kind);
    d["L"] = geometry.l;
    d["N"] = geometry.n;
    d["omega"] = std::vector<double>(omega.begin(), omega.end());
    s.descriptor = d.dump();
    return s;
}

Scenario scenario_latent(BlockGeometry geometry, const ComplexMatrix& h,
                         const ComplexMatrix& noise, ScenarioKind kind) {
    require_geometry(geometry);
    if (kind != ScenarioKind::latent_correlation && kind != ScenarioKind::latent_sphericity)
        throw Error("scenario_latent: kind must be a latent kind");
    if (h.rows() != geometry.dim())
        throw GeometryMismatchError("scenario_latent: channel must have L*N rows");
    if (noise.rows() != geometry.dim() || noise.cols() != geometry.dim())
        throw GeometryMismatchError("scenario_latent: noise must be L*N square");

    const double scale = frobenius_norm(noise);
    if (!offdiag_blocks_zero(noise, geometry, 1e-12 * scale))
        throw NotPositiveDefiniteError("scenario_latent: noise must be block-diagonal");
    if (kind == ScenarioKind::latent_sphericity) {
        // all diagonal blocks must agree: I kron R0
        const ComplexMatrix b0 = noise.block(0, 0, geometry.n, geometry.n);
        for (std::size_t k = 1; k < geometry.l; ++k) {
            const ComplexMatrix bk = noise.block(k * geometry.n, k * geometry.n, geometry.n, geometry.n);
            if (max_abs_diff(b0, bk) > 1e-12 * scale)
                throw NotPositiveDefiniteError("scenario_latent: noise blocks differ; not I kron R0");
        }
    }
    hermitian_sqrt(noise);  // PD certification; throws otherwise

    ComplexMatrix hh(geometry.dim(), geometry.dim());
    kernels::active().matmul_acc(h.data(), h.adjoint().data(), hh.data(), h.rows(), h.cols(),
                                 h.rows());

    Scenario s;
    s.geometry = geometry;
    s.kind = kind;
    s.r_h0 = noise;
    s.r_h1 = hermitian_average(hh + noise);

    json d;
    d["model"] = "latent";
    d["kind"] = to_string(kind);
    d["L"] = geometry.l;
    d["N"] = geometry.n;
    d["p"] = h.cols();
    s.descriptor = d.dump();
    return s;
}

Scenario make_latent_scenario(BlockGeometry geometry, std::size_t p, double snr,
                              std::uint64_t channel_seed, const ComplexMatrix* r0,
                              ScenarioKind kind) {
    require_geometry(geometry);
    if (p < 1) throw Error("make_latent_scenario: rank must be at least 1");
    if (!(snr > 0.0)) throw Error("make_latent_scenario: snr must be positive");

    ComplexMatrix noise;
    if (kind == ScenarioKind::latent_sphericity) {
        noise = kron(ComplexMatrix::identity(geometry.l),
                     r0 ? *r0 : ComplexMatrix::identity(geometry.n));
    } else {
        if (r0) throw Error("make_latent_scenario: r0 only applies to latent_sphericity");
        noise = ComplexMatrix::identity(geometry.dim());
    }

    Philox rng(channel_seed, 0);
    ComplexMatrix h(geometry.dim(), p);
    for (std::size_t i = 0; i < geometry.dim(); ++i)
        for (std::size_t j = 0; j < p; ++j) h(i, j) = rng.next_cgaussian();
    double tr_hh = 0.0;
    for (std::size_t i = 0; i < geometry.dim(); ++i)
        for (std::size_t j = 0; j < p; ++j) tr_hh += std::norm(h(i, j));
    const double tr_noise = noise.trace().real();
    const double scale = std::sqrt(snr * tr_noise / tr_hh);
    h *= cdouble(scale, 0.0);

    Scenario s = scenario_latent(geometry, h, noise, kind);
    json d = json::parse(s.descriptor);
    d["snr"] = snr;
    d["channel_seed"] = channel_seed;
    d["r0"] = r0 ? "explicit" : "identity_default";
    s.descriptor = d.dump();
    return s;
}

std::vector<double> equispaced_omega(std::size_t l, double lo, double hi) {
    std::vector<double> w(l);
    if (l == 1) {
        w[0] = 0.5 * (lo + hi);
        return w;
    }
    for (std::size_t k = 0; k < l; ++k)
        w[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(l - 1);
    return w;
}

std::string scenario_to_json(const Scenario& s) { return s.descriptor; }

Scenario scenario_from_json(const std::string& text) {
    json d = json::parse(text);
    const BlockGeometry g{d.at("L").get<std::size_t>(), d.at("N").get<std::size_t>()};
    const std::string model = d.at("model").get<std::string>();
    const ScenarioKind kind = scenario_kind_from_string(d.at("kind").get<std::string>());
    if (model == "circulant") {
        const auto omega = d.at("omega").get<std::vector<double>>();
        return scenario_circulant(g, omega, kind);
    }
    if (model == "latent") {
        const std::size_t p = d.at("p").get<std::size_t>();
        const double snr = d.at("snr").get<double>();
        const std::uint64_t seed = d.at("channel_seed").get<std::uint64_t>();
        if (d.value("r0", "identity_default") != std::string("identity_default"))
            throw Error("scenario with an explicit r0 matrix cannot be rebuilt from JSON");
        return make_latent_scenario(g, p, snr, seed, nullptr, kind);
    }
    throw Error("unknown scenario model: " + model);
}

}  // namespace covtest
